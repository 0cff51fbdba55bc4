//! Benchmark grids from TOML files or command-line axes.
//!
//! ```toml
//! trials = 10
//! seed = 7
//! time_limit = 300
//!
//! [[grid]]
//! family = "hard"
//! n = [500, 1000]
//! cond = [1e6, 1e14]
//! solvers = ["ras", "kr"]
//! ```

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use rasqp::bench::{BenchmarkPlan, SolverKind, SolverSpec};
use rasqp::{Family, GeneratorSpec};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn list<T: Clone>(v: &Option<OneOrMany<T>>) -> Vec<T> {
    v.as_ref().map(|v| v.to_vec()).unwrap_or_default()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub family: Family,
    pub n: OneOrMany<usize>,
    pub epsilon: Option<OneOrMany<f64>>,
    pub density: Option<OneOrMany<f64>>,
    pub cond: Option<OneOrMany<f64>>,
    pub solvers: Option<Vec<SolverKind>>,
    pub tol: Option<f64>,
    pub max_solves: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub time_limit: Option<f64>,
    pub threads: Option<usize>,
    pub grid: Vec<GridEntry>,
}

/// The generator axes of one family. Each family takes exactly its own axes.
pub struct Axes {
    pub family: Family,
    pub n: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub density: Vec<f64>,
    pub cond: Vec<f64>,
}

impl Axes {
    pub fn expand(&self) -> Result<Vec<GeneratorSpec>> {
        let fam = self.family;
        let need = |name: &str, v: &[f64], wanted: bool| -> Result<()> {
            match (wanted, v.is_empty()) {
                (true, true) => bail!("{fam} family requires --{name}"),
                (false, false) => bail!("{fam} family does not take --{name}"),
                _ => Ok(()),
            }
        };
        need("epsilon", &self.epsilon, fam == Family::Easy)?;
        need("density", &self.density, fam == Family::Medium)?;
        need("cond", &self.cond, fam != Family::Easy)?;
        if self.n.is_empty() {
            bail!("at least one --n is required");
        }
        let mut out = Vec::new();
        for &n in &self.n {
            match fam {
                Family::Easy => {
                    for &e in &self.epsilon {
                        out.push(GeneratorSpec::easy(n, e, 0));
                    }
                }
                Family::Medium => {
                    for &d in &self.density {
                        for &c in &self.cond {
                            out.push(GeneratorSpec::medium(n, d, c, 0));
                        }
                    }
                }
                Family::Hard => {
                    for &c in &self.cond {
                        out.push(GeneratorSpec::hard(n, c, 0));
                    }
                }
            }
        }
        for g in &out {
            g.validate()?;
        }
        Ok(out)
    }
}

pub fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Ras, SolverKind::Kr]
}

pub fn solver_specs(
    kinds: &[SolverKind],
    tol: Option<f64>,
    max_solves: Option<usize>,
) -> Vec<SolverSpec> {
    kinds
        .iter()
        .map(|&kind| SolverSpec {
            kind,
            tol,
            max_solves,
        })
        .collect()
}

pub fn parse_plan(text: &str) -> Result<BenchmarkPlan> {
    let file: PlanFile = toml::from_str(text).context("invalid plan file")?;
    let mut plan = BenchmarkPlan::default();
    for entry in &file.grid {
        let gens = Axes {
            family: entry.family,
            n: entry.n.to_vec(),
            epsilon: list(&entry.epsilon),
            density: list(&entry.density),
            cond: list(&entry.cond),
        }
        .expand()?;
        let kinds = entry.solvers.clone().unwrap_or_else(default_solvers);
        let solvers = solver_specs(&kinds, entry.tol, entry.max_solves);
        plan.grid
            .extend(BenchmarkPlan::from_grid(&gens, &solvers).grid);
    }
    if let Some(t) = file.trials {
        plan.trials = t;
    }
    if let Some(s) = file.seed {
        plan.base_seed = s;
    }
    if let Some(t) = file.time_limit {
        plan.time_limit = t;
    }
    plan.threads = file.threads;
    plan.validate()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_arithmetic() {
        let plan = parse_plan(
            "trials = 3\nseed = 7\n[[grid]]\nfamily = \"hard\"\nn = 50\ncond = [1e6, 1e10]\nsolvers = [\"ras\", \"kr\"]\n",
        )
        .unwrap();
        assert_eq!(plan.grid.len(), 4);
        assert_eq!(plan.trials, 3);
        assert_eq!(plan.base_seed, 7);
    }

    #[test]
    fn missing_axis_is_an_error() {
        let e = parse_plan("[[grid]]\nfamily = \"medium\"\nn = 50\ncond = 1e6\n").unwrap_err();
        assert!(format!("{e:#}").contains("density"));
        assert!(
            parse_plan("[[grid]]\nfamily = \"easy\"\nn = 50\nepsilon = 1\ncond = 1e6\n").is_err()
        );
        assert!(
            parse_plan("[[grid]]\nfamily = \"easy\"\nn = 50\nepsilon = 1\nbogus = 1\n").is_err()
        );
    }
}
