//! Sorted index sets used for every active/inactive partition.

use std::fmt;

/// A set of 0-based variable indexes, kept sorted ascending without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new() -> Self {
        IndexSet(Vec::new())
    }

    /// `{0, 1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        IndexSet((0..n).collect())
    }

    /// Builds a set from arbitrary indexes; sorts and deduplicates.
    pub fn from_unsorted(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }

    /// Wraps a vector that is already strictly increasing.
    pub(crate) fn from_sorted_unchecked(v: Vec<usize>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        IndexSet(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Largest element, if any.
    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        IndexSet(out)
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        IndexSet(out)
    }

    /// `self \ other`.
    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len());
        let mut j = 0;
        for &x in a {
            while j < b.len() && b[j] < x {
                j += 1;
            }
            if j < b.len() && b[j] == x {
                continue;
            }
            out.push(x);
        }
        IndexSet(out)
    }

    /// `{0..n} \ self`.
    pub fn complement(&self, n: usize) -> IndexSet {
        let mut out = Vec::with_capacity(n.saturating_sub(self.len()));
        let mut j = 0;
        for x in 0..n {
            if j < self.0.len() && self.0[j] == x {
                j += 1;
            } else {
                out.push(x);
            }
        }
        IndexSet(out)
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.intersection(other).is_empty()
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        IndexSet::from_unsorted(iter.into_iter().collect())
    }
}

impl From<Vec<usize>> for IndexSet {
    fn from(v: Vec<usize>) -> Self {
        IndexSet::from_unsorted(v)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
