//! Partition bookkeeping for the random active set iteration: sign classification,
//! history categories, randomized exchange selection and the set update.

use rand::Rng;

use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::KktPoint;

/// Current inactive/active split and its feasible/infeasible refinement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub inactive: IndexSet,
    pub active: IndexSet,
    /// `{i in I : x_i <= 0}`
    pub im: IndexSet,
    pub ip: IndexSet,
    /// `{j in A : s_j < -tol}`
    pub am: IndexSet,
    pub ap: IndexSet,
}

impl Partition {
    pub fn n(&self) -> usize {
        self.inactive.len() + self.active.len()
    }

    pub fn infeasible_count(&self) -> usize {
        self.im.len() + self.am.len()
    }

    pub fn is_kkt(&self) -> bool {
        self.im.is_empty() && self.am.is_empty()
    }
}

/// Sets remembered from the previous iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct History {
    pub ip0: IndexSet,
    pub ap0: IndexSet,
    pub imc: IndexSet,
    pub amc: IndexSet,
    pub imf: IndexSet,
    pub amf: IndexSet,
}

impl History {
    /// Start-up state: every index counts as "infeasible and kept" on both sides.
    pub fn initial(n: usize) -> Self {
        History {
            ip0: IndexSet::new(),
            ap0: IndexSet::new(),
            imc: IndexSet::new(),
            amc: IndexSet::new(),
            imf: IndexSet::full(n),
            amf: IndexSet::full(n),
        }
    }

    /// History after exchanging `ex` out of `partition`.
    pub fn after_exchange(partition: &Partition, ex: &Exchange) -> Self {
        History {
            ip0: partition.ip.clone(),
            ap0: partition.ap.clone(),
            imc: ex.imc.clone(),
            amc: ex.amc.clone(),
            imf: ex.imf.clone(),
            amf: ex.amf.clone(),
        }
    }

    /// History after an empty draw: the partition stays, and all retained infeasible
    /// indexes move to the "kept" categories before redrawing.
    pub fn after_resample(partition: &Partition) -> Self {
        History {
            ip0: partition.ip.clone(),
            ap0: partition.ap.clone(),
            imc: IndexSet::new(),
            amc: IndexSet::new(),
            imf: partition.im.clone(),
            amf: partition.am.clone(),
        }
    }
}

/// Infeasible indexes split by where they sat in the previous iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Categories {
    /// `Im ∩ Ip0`
    pub nimp0: IndexSet,
    /// `Im ∩ Imf`
    pub nimf: IndexSet,
    /// `Im ∩ Amc`
    pub nimc: IndexSet,
    /// `Am ∩ Ap0`
    pub namp0: IndexSet,
    /// `Am ∩ Amf`
    pub namf: IndexSet,
    /// `Am ∩ Imc`
    pub namc: IndexSet,
}

impl Categories {
    pub fn im(&self) -> IndexSet {
        self.nimp0.union(&self.nimf).union(&self.nimc)
    }

    pub fn am(&self) -> IndexSet {
        self.namp0.union(&self.namf).union(&self.namc)
    }
}

/// Exchange probabilities for the six categories, in the order
/// `NImp0, NImf, NImc, NAmp0, NAmf, NAmc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChangeProbabilities([f64; 6]);

impl ChangeProbabilities {
    /// Tuned values: `(0.5, 0.98, 0.98, 0.01, 0.93, 0.94)`.
    pub const TUNED: ChangeProbabilities = ChangeProbabilities([0.5, 0.98, 0.98, 0.01, 0.93, 0.94]);

    /// Each probability must lie strictly inside `(0, 1)`.
    pub fn new(p: [f64; 6]) -> Result<Self> {
        for &v in &p {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::ProbabilityOutOfRange {
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(ChangeProbabilities(p))
    }

    /// All six probabilities equal to one: every infeasible index is exchanged, which
    /// turns the random iteration into the deterministic full-exchange (KR) step.
    /// Finite termination is no longer guaranteed with this setting.
    pub fn certain() -> Self {
        ChangeProbabilities([1.0; 6])
    }

    pub fn values(&self) -> [f64; 6] {
        self.0
    }
}

impl Default for ChangeProbabilities {
    fn default() -> Self {
        Self::TUNED
    }
}

/// Outcome of a randomized selection: the change/keep split of `Im` and `Am`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Exchange {
    pub imc: IndexSet,
    pub imf: IndexSet,
    pub amc: IndexSet,
    pub amf: IndexSet,
}

impl Exchange {
    pub fn is_empty(&self) -> bool {
        self.imc.is_empty() && self.amc.is_empty()
    }

    /// Full exchange: `Imc = Im`, `Amc = Am`.
    pub fn full(partition: &Partition) -> Self {
        Exchange {
            imc: partition.im.clone(),
            imf: IndexSet::new(),
            amc: partition.am.clone(),
            amf: IndexSet::new(),
        }
    }
}

/// Sign classification of a point produced for partition `(I, A)`.
pub fn classify(point: &KktPoint, inactive: &IndexSet, active: &IndexSet, tol: f64) -> Partition {
    let im: Vec<usize> = inactive
        .iter()
        .copied()
        .filter(|&i| point.x[i] <= 0.0)
        .collect();
    let am: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&j| point.s[j] < -tol)
        .collect();
    let im = IndexSet::from_sorted_unchecked(im);
    let am = IndexSet::from_sorted_unchecked(am);
    Partition {
        ip: inactive.difference(&im),
        ap: active.difference(&am),
        inactive: inactive.clone(),
        active: active.clone(),
        im,
        am,
    }
}

pub fn categorize(partition: &Partition, history: &History) -> Result<Categories> {
    let im = &partition.im;
    let am = &partition.am;
    let cats = Categories {
        nimp0: im.intersection(&history.ip0),
        nimf: im.intersection(&history.imf),
        nimc: im.intersection(&history.amc),
        namp0: am.intersection(&history.ap0),
        namf: am.intersection(&history.amf),
        namc: am.intersection(&history.imc),
    };
    let im_count = cats.nimp0.len() + cats.nimf.len() + cats.nimc.len();
    let am_count = cats.namp0.len() + cats.namf.len() + cats.namc.len();
    if im_count != im.len() || am_count != am.len() || cats.im() != *im || cats.am() != *am {
        return Err(Error::CategoryLeak);
    }
    Ok(cats)
}

/// Keeps each element of `set` independently with its probability. `probs` is either
/// one value per element or a single broadcast value. Exactly one uniform draw is
/// consumed per element, in ascending index order.
pub fn rand_subset<R: Rng + ?Sized>(
    set: &IndexSet,
    probs: &[f64],
    rng: &mut R,
) -> Result<IndexSet> {
    let broadcast = probs.len() == 1;
    if !broadcast && probs.len() != set.len() {
        return Err(Error::ProbabilityLength {
            expected: set.len(),
            found: probs.len(),
        });
    }
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange {
                value: p,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    let mut out = Vec::new();
    for (k, &i) in set.iter().enumerate() {
        let p = if broadcast { probs[0] } else { probs[k] };
        let u: f64 = rng.random();
        if u < p {
            out.push(i);
        }
    }
    Ok(IndexSet::from_sorted_unchecked(out))
}

fn check_sigma_range(probs: &[f64], sigma: f64) -> Result<()> {
    for &p in probs {
        if !(p >= sigma && p <= 1.0 - sigma) {
            return Err(Error::ProbabilityOutOfRange {
                value: p,
                lo: sigma,
                hi: 1.0 - sigma,
            });
        }
    }
    Ok(())
}

/// Exchange selection with caller-supplied probabilities bounded to `[sigma, 1 - sigma]`.
pub fn select_exchange_generic<R: Rng + ?Sized>(
    partition: &Partition,
    p_im: &[f64],
    p_am: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<Exchange> {
    if !(sigma > 0.0 && sigma <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0, 0.5], got {sigma}"
        )));
    }
    check_sigma_range(p_im, sigma)?;
    check_sigma_range(p_am, sigma)?;
    let imc = rand_subset(&partition.im, p_im, rng)?;
    let amc = rand_subset(&partition.am, p_am, rng)?;
    Ok(Exchange {
        imf: partition.im.difference(&imc),
        amf: partition.am.difference(&amc),
        imc,
        amc,
    })
}

/// Per-index probabilities for `parts`, merged into ascending index order.
fn merged_probs(parts: [(&IndexSet, f64); 3]) -> (IndexSet, Vec<f64>) {
    let mut tagged: Vec<(usize, f64)> = parts
        .iter()
        .flat_map(|(set, p)| set.iter().map(move |&i| (i, *p)))
        .collect();
    tagged.sort_by_key(|t| t.0);
    let set = IndexSet::from_sorted_unchecked(tagged.iter().map(|t| t.0).collect());
    (set, tagged.into_iter().map(|t| t.1).collect())
}

/// Exchange selection with one fixed probability per category.
pub fn select_exchange_ras<R: Rng + ?Sized>(
    cats: &Categories,
    probs: &ChangeProbabilities,
    rng: &mut R,
) -> Exchange {
    let p = probs.values();
    let (im, p_im) = merged_probs([(&cats.nimp0, p[0]), (&cats.nimf, p[1]), (&cats.nimc, p[2])]);
    let (am, p_am) = merged_probs([(&cats.namp0, p[3]), (&cats.namf, p[4]), (&cats.namc, p[5])]);
    let imc = rand_subset(&im, &p_im, rng).expect("category probabilities validated");
    let amc = rand_subset(&am, &p_am, rng).expect("category probabilities validated");
    Exchange {
        imf: im.difference(&imc),
        amf: am.difference(&amc),
        imc,
        amc,
    }
}

/// `I_new = Ip ∪ Imf ∪ Amc`, `A_new = {0..n} \ I_new`.
pub fn next_sets(partition: &Partition, ex: &Exchange) -> (IndexSet, IndexSet) {
    let inactive = partition.ip.union(&ex.imf).union(&ex.amc);
    let active = inactive.complement(partition.n());
    (inactive, active)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::{any, prop_assert_eq, proptest};
    use rand::seq::SliceRandom;

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::from(v.to_vec())
    }

    fn partition(n: usize, ip: &[usize], im: &[usize], ap: &[usize], am: &[usize]) -> Partition {
        let (ip, im, ap, am) = (set(ip), set(im), set(ap), set(am));
        let p = Partition {
            inactive: ip.union(&im),
            active: ap.union(&am),
            ip,
            im,
            ap,
            am,
        };
        assert_eq!(p.n(), n);
        p
    }

    #[test]
    fn classify_examples() {
        let pt = KktPoint {
            x: vec![2.0, 0.0, 0.0],
            s: vec![0.0, 0.0, -5.0],
        };
        let p = classify(&pt, &set(&[0]), &set(&[1, 2]), 1e-8);
        assert!(p.im.is_empty());
        assert_eq!(p.ip, set(&[0]));
        assert_eq!(p.am, set(&[2]));
        assert_eq!(p.ap, set(&[1]));

        // zero-valued inactive variable is infeasible
        let pt = KktPoint {
            x: vec![0.0],
            s: vec![0.0],
        };
        let p = classify(&pt, &set(&[0]), &set(&[]), 1e-8);
        assert_eq!(p.im, set(&[0]));

        // s_j = -tol exactly stays feasible
        let pt = KktPoint {
            x: vec![0.0],
            s: vec![-1e-8],
        };
        let p = classify(&pt, &set(&[]), &set(&[0]), 1e-8);
        assert!(p.am.is_empty());
        assert_eq!(p.ap, set(&[0]));
    }

    #[test]
    fn categorize_first_iteration() {
        let h = History::initial(4);
        let p = partition(4, &[0], &[1], &[3], &[2]);
        let c = categorize(&p, &h).unwrap();
        assert_eq!(c.nimf, set(&[1]));
        assert_eq!(c.namf, set(&[2]));
        assert!(c.nimp0.is_empty() && c.nimc.is_empty());
        assert!(c.namp0.is_empty() && c.namc.is_empty());
    }

    #[test]
    fn categorize_empty_and_moved_index() {
        let h = History::initial(2);
        let p = partition(2, &[0, 1], &[], &[], &[]);
        assert_eq!(categorize(&p, &h).unwrap(), Categories::default());

        // index 1 moved from Im to A last step and is now dual infeasible
        let h = History {
            ip0: set(&[0]),
            ap0: set(&[]),
            imc: set(&[1]),
            amc: set(&[]),
            imf: set(&[]),
            amf: set(&[]),
        };
        let p = partition(2, &[0], &[], &[], &[1]);
        let c = categorize(&p, &h).unwrap();
        assert_eq!(c.namc, set(&[1]));
    }

    #[test]
    fn categorize_detects_leak() {
        let h = History {
            ip0: set(&[]),
            ap0: set(&[]),
            imc: set(&[]),
            amc: set(&[]),
            imf: set(&[]),
            amf: set(&[]),
        };
        let p = partition(2, &[], &[0], &[1], &[]);
        assert_eq!(categorize(&p, &h), Err(Error::CategoryLeak));
    }

    #[test]
    fn rand_subset_extremes_and_errors() {
        let mut rng = stream_rng(1, Stream::Solver);
        let s = IndexSet::full(20);
        assert_eq!(rand_subset(&s, &[1.0], &mut rng).unwrap(), s);
        assert!(rand_subset(&s, &[0.0], &mut rng).unwrap().is_empty());
        assert!(rand_subset(&s, &[1.5], &mut rng).is_err());
        assert!(rand_subset(&s, &[0.5, 0.5], &mut rng).is_err());
    }

    #[test]
    fn rand_subset_fraction() {
        // Binomial(1e5, 0.3): sd of the fraction is ~0.00145, so +-0.01 is ~7 sd.
        let mut rng = stream_rng(42, Stream::Solver);
        let s = IndexSet::full(100_000);
        let r = rand_subset(&s, &[0.3], &mut rng).unwrap();
        let frac = r.len() as f64 / s.len() as f64;
        assert!((frac - 0.3).abs() < 0.01, "{frac}");
    }

    #[test]
    fn rand_subset_is_deterministic() {
        let s = IndexSet::full(500);
        let a = rand_subset(&s, &[0.4], &mut stream_rng(9, Stream::Solver)).unwrap();
        let b = rand_subset(&s, &[0.4], &mut stream_rng(9, Stream::Solver)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generic_selection() {
        let mut rng = stream_rng(3, Stream::Solver);
        let empty = partition(3, &[0, 1, 2], &[], &[], &[]);
        let ex = select_exchange_generic(&empty, &[], &[], 0.5, &mut rng).unwrap();
        assert_eq!(ex, Exchange::default());

        let p = partition(4, &[0], &[1], &[], &[2, 3]);
        assert!(select_exchange_generic(&p, &[0.6], &[0.5, 0.5], 0.5, &mut rng).is_err());
        assert!(select_exchange_generic(&p, &[0.5], &[0.5, 0.5], 0.0, &mut rng).is_err());
        let ex = select_exchange_generic(&p, &[0.5], &[0.5, 0.5], 0.5, &mut rng).unwrap();
        assert_eq!(ex.imc.union(&ex.imf), p.im);
        assert!(ex.imc.is_disjoint(&ex.imf));
        assert_eq!(ex.amc.union(&ex.amf), p.am);
    }

    #[test]
    fn generic_selection_near_full() {
        // With p = 1 - sigma the exchanged fraction concentrates at 1 - sigma.
        let sigma = 0.05;
        let n = 20_000;
        let p = Partition {
            inactive: IndexSet::full(n),
            active: IndexSet::new(),
            im: IndexSet::full(n),
            ip: IndexSet::new(),
            am: IndexSet::new(),
            ap: IndexSet::new(),
        };
        let mut rng = stream_rng(11, Stream::Solver);
        let ex = select_exchange_generic(&p, &[1.0 - sigma], &[], sigma, &mut rng).unwrap();
        let frac = ex.imc.len() as f64 / n as f64;
        assert!((frac - 0.95).abs() < 0.01, "{frac}");
    }

    #[test]
    fn ras_selection_examples() {
        let mut rng = stream_rng(4, Stream::Solver);
        let ex = select_exchange_ras(
            &Categories::default(),
            &ChangeProbabilities::TUNED,
            &mut rng,
        );
        assert!(ex.is_empty() && ex.imf.is_empty() && ex.amf.is_empty());

        let cats = Categories {
            nimp0: set(&[0]),
            nimf: set(&[3]),
            nimc: set(&[5]),
            namp0: set(&[1]),
            namf: set(&[2]),
            namc: set(&[4]),
        };
        let ex = select_exchange_ras(&cats, &ChangeProbabilities::certain(), &mut rng);
        assert_eq!(ex.imc, set(&[0, 3, 5]));
        assert_eq!(ex.amc, set(&[1, 2, 4]));
        assert!(ex.imf.is_empty() && ex.amf.is_empty());
    }

    #[test]
    fn ras_selection_namp0_mean() {
        // |NAmp0| = 1e4 at p4 = 0.01: Binomial mean 100, sd ~9.95.
        let cats = Categories {
            namp0: IndexSet::full(10_000),
            ..Categories::default()
        };
        let mut rng = stream_rng(8, Stream::Solver);
        let ex = select_exchange_ras(&cats, &ChangeProbabilities::TUNED, &mut rng);
        assert!(
            (ex.amc.len() as f64 - 100.0).abs() < 40.0,
            "{}",
            ex.amc.len()
        );
        assert!(ex.imc.is_empty());
    }

    #[test]
    fn change_probabilities_validation() {
        assert!(ChangeProbabilities::new([0.5; 6]).is_ok());
        assert!(ChangeProbabilities::new([0.5, 0.5, 0.5, 0.5, 0.5, 1.0]).is_err());
        assert!(ChangeProbabilities::new([0.0, 0.5, 0.5, 0.5, 0.5, 0.5]).is_err());
        assert_eq!(
            ChangeProbabilities::default().values(),
            [0.5, 0.98, 0.98, 0.01, 0.93, 0.94]
        );
    }

    #[test]
    fn next_sets_examples() {
        let p = partition(3, &[0], &[1], &[], &[2]);
        let ex = Exchange {
            imc: set(&[1]),
            imf: set(&[]),
            amc: set(&[2]),
            amf: set(&[]),
        };
        let (i, a) = next_sets(&p, &ex);
        assert_eq!((i, a), (set(&[0, 2]), set(&[1])));

        let ex = Exchange {
            imc: set(&[]),
            imf: set(&[1]),
            amc: set(&[]),
            amf: set(&[2]),
        };
        let (i, _) = next_sets(&p, &ex);
        assert_eq!(i, p.inactive);

        let (i, _) = next_sets(&p, &Exchange::full(&p));
        assert_eq!(i, p.ip.union(&p.am));
    }

    #[test]
    fn next_sets_exhaustive_small() {
        // Every assignment of n <= 6 indexes to {Ip, Im, Ap, Am} and every change mask.
        let mut rng = stream_rng(0, Stream::Solver);
        for n in 1..=6usize {
            for code in 0..4usize.pow(n as u32) {
                let mut sets: [Vec<usize>; 4] = Default::default();
                let mut c = code;
                for i in 0..n {
                    sets[c % 4].push(i);
                    c /= 4;
                }
                let p = partition(n, &sets[0], &sets[1], &sets[2], &sets[3]);
                let imc = rand_subset(&p.im, &[0.5], &mut rng).unwrap();
                let amc = rand_subset(&p.am, &[0.5], &mut rng).unwrap();
                let ex = Exchange {
                    imf: p.im.difference(&imc),
                    amf: p.am.difference(&amc),
                    imc,
                    amc,
                };
                let (i, a) = next_sets(&p, &ex);
                assert_eq!(i.union(&a), IndexSet::full(n));
                assert!(i.is_disjoint(&a));
                assert_eq!(a, p.ap.union(&ex.amf).union(&ex.imc));
            }
        }
    }

    proptest! {
        #[test]
        fn categories_partition_infeasible_sets(n in 1usize..9, seed in any::<u64>()) {
            // Random previous partition and exchange, then a random current sign pattern.
            let mut rng = stream_rng(seed, Stream::Solver);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let cut = rng.random_range(0..=n);
            let prev_i = IndexSet::from(idx[..cut].to_vec());
            let prev_a = prev_i.complement(n);
            let prev_im = rand_subset(&prev_i, &[0.5], &mut rng).unwrap();
            let prev_am = rand_subset(&prev_a, &[0.5], &mut rng).unwrap();
            let prev = Partition {
                ip: prev_i.difference(&prev_im),
                ap: prev_a.difference(&prev_am),
                inactive: prev_i,
                active: prev_a,
                im: prev_im,
                am: prev_am,
            };
            let probs = ChangeProbabilities::new([0.5; 6]).unwrap();
            let cats = categorize(&prev, &History::initial(n)).unwrap();
            let ex = select_exchange_ras(&cats, &probs, &mut rng);
            let hist = History::after_exchange(&prev, &ex);
            let (i, a) = next_sets(&prev, &ex);
            let im = rand_subset(&i, &[0.5], &mut rng).unwrap();
            let am = rand_subset(&a, &[0.5], &mut rng).unwrap();
            let cur = Partition { ip: i.difference(&im), ap: a.difference(&am), inactive: i, active: a, im, am };
            let c = categorize(&cur, &hist).unwrap();
            prop_assert_eq!(c.nimp0.len() + c.nimf.len() + c.nimc.len(), cur.im.len());
            prop_assert_eq!(c.namp0.len() + c.namf.len() + c.namc.len(), cur.am.len());
            // resampling keeps the bookkeeping consistent too
            let c2 = categorize(&cur, &History::after_resample(&cur)).unwrap();
            prop_assert_eq!(c2.nimf, cur.im.clone());
            prop_assert_eq!(c2.namf, cur.am.clone());
        }

        #[test]
        fn certain_probabilities_give_full_exchange(n in 1usize..9, seed in any::<u64>()) {
            let mut rng = stream_rng(seed, Stream::Solver);
            let i = rand_subset(&IndexSet::full(n), &[0.5], &mut rng).unwrap();
            let a = i.complement(n);
            let im = rand_subset(&i, &[0.5], &mut rng).unwrap();
            let am = rand_subset(&a, &[0.5], &mut rng).unwrap();
            let p = Partition { ip: i.difference(&im), ap: a.difference(&am), inactive: i, active: a, im, am };
            let cats = categorize(&p, &History::initial(n)).unwrap();
            let ex = select_exchange_ras(&cats, &ChangeProbabilities::certain(), &mut rng);
            prop_assert_eq!(next_sets(&p, &ex), next_sets(&p, &Exchange::full(&p)));
        }
    }
}
