//! Random matrix ensembles, sparse coefficient vectors, and the suite
//! table that pairs them.
//!
//! Every draw is a pure function of its seed. [`make_instance`] hashes
//! `(master_seed, E, N, n, k, replicate)` with [`mix_seed`] and then splits
//! the result into a matrix substream and a coefficient substream, so the
//! matrix does not depend on how many coefficient draws were made.

use std::f64::consts::PI;
use std::fmt;

use crate::linalg::DenseMatrix;
use crate::rng::{mix_seed, CounterRng};
use crate::{Error, Result};

pub const MATRIX_STREAM: u64 = 1;
pub const COEFFICIENT_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ensemble {
    /// iid N(0, 1).
    Gaussian,
    /// iid uniform on {0, 1}.
    Bernoulli01,
    /// Distinct rows of the orthonormal type-II DCT matrix.
    PartialDct,
    /// iid with P(0) = 1 − p and P(+1) = P(−1) = p/2.
    Ternary { p: f64 },
    /// Distinct rows of the Sylvester Hadamard matrix (±1 entries).
    PartialHadamard,
    /// Distinct 0/1 columns, each with `round(ones_fraction · n)` ones.
    Expander { ones_fraction: f64 },
    /// iid uniform on {−1, +1}.
    Rademacher,
}

impl Ensemble {
    pub fn name(&self) -> String {
        match self {
            Ensemble::Gaussian => "Gaussian".into(),
            Ensemble::Bernoulli01 => "Bernoulli".into(),
            Ensemble::PartialDct => "Fourier".into(),
            Ensemble::Ternary { p } => format!("Ternary({p:.4})"),
            Ensemble::PartialHadamard => "Hadamard".into(),
            Ensemble::Expander { ones_fraction } => format!("Expander({ones_fraction:.4})"),
            Ensemble::Rademacher => "Rademacher".into(),
        }
    }

    /// Validates `(n, N)` for this ensemble.
    pub fn check_shape(&self, n: usize, big_n: usize) -> Result<()> {
        if n == 0 || n > big_n {
            return Err(Error::InvalidShape(format!(
                "need 0 < n <= N, got n = {n}, N = {big_n}"
            )));
        }
        match *self {
            Ensemble::PartialHadamard if !big_n.is_power_of_two() => Err(Error::InvalidShape(
                format!("Hadamard requires power-of-two N, got N = {big_n}"),
            )),
            Ensemble::Ternary { p } if !(p > 0.0 && p <= 1.0) => Err(Error::InvalidShape(
                format!("ternary nonzero probability {p} outside (0, 1]"),
            )),
            Ensemble::Expander { ones_fraction } => {
                if !(ones_fraction > 0.0 && ones_fraction <= 1.0) {
                    return Err(Error::InvalidShape(format!(
                        "expander ones fraction {ones_fraction} outside (0, 1]"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Expander column degree: `round(ones_fraction · n)`, at least 1.
pub fn expander_degree(ones_fraction: f64, n: usize) -> usize {
    ((ones_fraction * n as f64).round() as usize).clamp(1, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoefficientSign {
    /// Nonzeros uniform on (0, 1].
    NonNegative,
    /// Nonzeros uniform on [−1, 1] \ {0}.
    Signed,
}

impl fmt::Display for CoefficientSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoefficientSign::NonNegative => "+",
            CoefficientSign::Signed => "±",
        })
    }
}

/// A matrix ensemble paired with a coefficient sign, identified by its
/// integer suite code.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Suite {
    pub id: u32,
    pub ensemble: Ensemble,
    pub sign: CoefficientSign,
}

/// Suite codes in use.
pub const SUITE_IDS: [u32; 18] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 19, 20];

impl Suite {
    pub fn from_id(id: u32) -> Result<Suite> {
        let ensemble = match id {
            1 | 2 => Ensemble::Gaussian,
            3 | 4 => Ensemble::Bernoulli01,
            5 | 6 => Ensemble::PartialDct,
            // Uniform on {−1, 0, 1}.
            7 | 8 => Ensemble::Ternary { p: 2.0 / 3.0 },
            9 | 10 => Ensemble::Ternary { p: 2.0 / 5.0 },
            11 | 12 => Ensemble::Ternary { p: 1.0 / 10.0 },
            13 | 14 => Ensemble::PartialHadamard,
            15 | 16 => Ensemble::Expander {
                ones_fraction: 1.0 / 15.0,
            },
            19 | 20 => Ensemble::Rademacher,
            _ => return Err(Error::Config(format!("unknown suite code {id}"))),
        };
        let sign = if id % 2 == 1 {
            CoefficientSign::NonNegative
        } else {
            CoefficientSign::Signed
        };
        Ok(Suite { id, ensemble, sign })
    }

    /// Gaussian suite with the same coefficient sign.
    pub fn baseline_id(&self) -> u32 {
        match self.sign {
            CoefficientSign::NonNegative => 1,
            CoefficientSign::Signed => 2,
        }
    }
}

pub fn sample_matrix(ensemble: &Ensemble, n: usize, big_n: usize, seed: u64) -> Result<DenseMatrix> {
    sample_matrix_with(ensemble, n, big_n, &mut CounterRng::new(seed))
}

pub fn sample_matrix_with(
    ensemble: &Ensemble,
    n: usize,
    big_n: usize,
    rng: &mut CounterRng,
) -> Result<DenseMatrix> {
    ensemble.check_shape(n, big_n)?;
    let mut a = DenseMatrix::zeros(n, big_n);
    match *ensemble {
        Ensemble::Gaussian => fill(&mut a, || rng.standard_normal()),
        Ensemble::Bernoulli01 => fill(&mut a, || (rng.next_word() >> 63) as f64),
        Ensemble::Rademacher => fill(&mut a, || if rng.next_word() >> 63 == 1 { 1.0 } else { -1.0 }),
        Ensemble::Ternary { p } => fill(&mut a, || {
            let u = rng.uniform();
            if u < 0.5 * p {
                1.0
            } else if u < p {
                -1.0
            } else {
                0.0
            }
        }),
        Ensemble::PartialDct => {
            let rows = rng.sample_without_replacement(big_n, n);
            let nf = big_n as f64;
            for (i, &k) in rows.iter().enumerate() {
                let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
                for (j, v) in a.row_mut(i).iter_mut().enumerate() {
                    *v = scale * (PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos();
                }
            }
        }
        Ensemble::PartialHadamard => {
            let rows = rng.sample_without_replacement(big_n, n);
            for (i, &k) in rows.iter().enumerate() {
                for (j, v) in a.row_mut(i).iter_mut().enumerate() {
                    *v = hadamard_entry(k, j);
                }
            }
        }
        Ensemble::Expander { ones_fraction } => {
            let d = expander_degree(ones_fraction, n);
            let budget = 1000 * big_n;
            let mut seen = std::collections::HashSet::with_capacity(big_n);
            let mut attempts = 0;
            for j in 0..big_n {
                loop {
                    if attempts >= budget {
                        return Err(Error::DuplicateExhaustion(budget));
                    }
                    attempts += 1;
                    let mut rows = rng.sample_without_replacement(n, d);
                    rows.sort_unstable();
                    if seen.insert(rows.clone()) {
                        for r in rows {
                            a[(r, j)] = 1.0;
                        }
                        break;
                    }
                }
            }
        }
    }
    Ok(a)
}

fn fill(a: &mut DenseMatrix, mut draw: impl FnMut() -> f64) {
    for i in 0..a.rows() {
        for v in a.row_mut(i) {
            *v = draw();
        }
    }
}

/// Entry `(i, j)` of the Sylvester Hadamard matrix.
#[inline]
pub fn hadamard_entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn sample_coefficients(sign: CoefficientSign, big_n: usize, k: usize, seed: u64) -> Result<Vec<f64>> {
    sample_coefficients_with(sign, big_n, k, &mut CounterRng::new(seed))
}

pub fn sample_coefficients_with(
    sign: CoefficientSign,
    big_n: usize,
    k: usize,
    rng: &mut CounterRng,
) -> Result<Vec<f64>> {
    if k > big_n {
        return Err(Error::InvalidShape(format!("k = {k} exceeds N = {big_n}")));
    }
    let mut x = vec![0.0; big_n];
    for j in rng.sample_without_replacement(big_n, k) {
        x[j] = match sign {
            CoefficientSign::NonNegative => rng.uniform_open_closed(),
            CoefficientSign::Signed => loop {
                let v = 2.0 * rng.uniform() - 1.0;
                if v != 0.0 {
                    break v;
                }
            },
        };
    }
    Ok(x)
}

/// Seeds of the two substreams of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InstanceSeeds {
    pub trial: u64,
    pub matrix: u64,
    pub coefficients: u64,
}

impl InstanceSeeds {
    pub fn from_trial_seed(trial: u64) -> Self {
        let root = CounterRng::new(trial);
        Self {
            trial,
            matrix: root.split(MATRIX_STREAM).key(),
            coefficients: root.split(COEFFICIENT_STREAM).key(),
        }
    }
}

/// Per-trial seed: a hash of the full cell identity and replicate index.
pub fn trial_seed(master_seed: u64, suite_id: u32, big_n: usize, n: usize, k: usize, replicate: u64) -> u64 {
    mix_seed(&[
        master_seed,
        suite_id as u64,
        big_n as u64,
        n as u64,
        k as u64,
        replicate,
    ])
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub x0: Vec<f64>,
    pub y: Vec<f64>,
    pub seeds: InstanceSeeds,
}

pub fn make_instance(
    suite: &Suite,
    big_n: usize,
    n: usize,
    k: usize,
    replicate: u64,
    master_seed: u64,
) -> Result<ProblemInstance> {
    let seed = trial_seed(master_seed, suite.id, big_n, n, k, replicate);
    build_instance(suite, big_n, n, k, InstanceSeeds::from_trial_seed(seed))
}

/// Draws an instance from explicit substream keys.
pub fn build_instance(
    suite: &Suite,
    big_n: usize,
    n: usize,
    k: usize,
    seeds: InstanceSeeds,
) -> Result<ProblemInstance> {
    if k > n {
        return Err(Error::InvalidShape(format!("k = {k} exceeds n = {n}")));
    }
    let mut matrix_rng = CounterRng::from_key(seeds.matrix);
    let mut coef_rng = CounterRng::from_key(seeds.coefficients);
    let a = sample_matrix_with(&suite.ensemble, n, big_n, &mut matrix_rng)?;
    let x0 = sample_coefficients_with(suite.sign, big_n, k, &mut coef_rng)?;
    let y = a.mul_vec(&x0)?;
    Ok(ProblemInstance { a, x0, y, seeds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_table_parity() {
        for id in SUITE_IDS {
            let s = Suite::from_id(id).unwrap();
            let expect = if id % 2 == 1 {
                CoefficientSign::NonNegative
            } else {
                CoefficientSign::Signed
            };
            assert_eq!(s.sign, expect);
        }
        assert!(Suite::from_id(17).is_err());
        assert_eq!(Suite::from_id(9).unwrap().baseline_id(), 1);
        assert_eq!(Suite::from_id(16).unwrap().baseline_id(), 2);
    }

    #[test]
    fn ternary_zero_fraction() {
        let a = sample_matrix(&Ensemble::Ternary { p: 0.1 }, 100, 200, 5).unwrap();
        let zeros = a.as_slice().iter().filter(|v| **v == 0.0).count() as f64;
        let total: f64 = 20_000.0;
        let sd = (total * 0.9 * 0.1f64).sqrt();
        assert!((zeros - 0.9 * total).abs() < 3.0 * sd);
    }

    #[test]
    fn hadamard_rows_orthogonal() {
        let a = sample_matrix(&Ensemble::PartialHadamard, 8, 8, 1).unwrap();
        for i in 0..8 {
            assert!(a.row(i).iter().all(|v| v.abs() == 1.0));
            for j in 0..i {
                assert_eq!(crate::linalg::dot(a.row(i), a.row(j)), 0.0);
            }
        }
        assert!(sample_matrix(&Ensemble::PartialHadamard, 8, 200, 1).is_err());
    }

    #[test]
    fn dct_rows_orthonormal() {
        let a = sample_matrix(&Ensemble::PartialDct, 10, 16, 2).unwrap();
        for i in 0..10 {
            for j in 0..=i {
                let d = crate::linalg::dot(a.row(i), a.row(j));
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expander_columns() {
        let a = sample_matrix(&Ensemble::Expander { ones_fraction: 1.0 / 15.0 }, 30, 200, 3).unwrap();
        let cols: Vec<Vec<f64>> = (0..200).map(|j| a.column(j)).collect();
        for c in &cols {
            assert_eq!(c.iter().filter(|v| **v == 1.0).count(), 2);
            assert_eq!(c.iter().filter(|v| **v == 0.0).count(), 28);
        }
        let mut keys: Vec<Vec<u8>> = cols.iter().map(|c| c.iter().map(|v| *v as u8).collect()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 200);
    }

    #[test]
    fn expander_exhaustion() {
        // Only C(3, 1) = 3 distinct columns exist.
        let e = Ensemble::Expander { ones_fraction: 0.3 };
        assert!(matches!(sample_matrix(&e, 3, 4, 1), Err(Error::DuplicateExhaustion(_))));
    }

    #[test]
    fn coefficient_edge_cases() {
        assert!(sample_coefficients(CoefficientSign::Signed, 10, 0, 1).unwrap().iter().all(|v| *v == 0.0));
        let full = sample_coefficients(CoefficientSign::NonNegative, 10, 10, 1).unwrap();
        assert!(full.iter().all(|v| *v > 0.0 && *v <= 1.0));
        let s = sample_coefficients(CoefficientSign::Signed, 50, 50, 2).unwrap();
        assert!(s.iter().all(|v| *v != 0.0 && v.abs() <= 1.0));
        assert!(sample_coefficients(CoefficientSign::Signed, 3, 4, 1).is_err());
    }

    #[test]
    fn instance_determinism_and_consistency() {
        let suite = Suite::from_id(2).unwrap();
        let p = make_instance(&suite, 40, 20, 5, 3, 99).unwrap();
        let q = make_instance(&suite, 40, 20, 5, 3, 99).unwrap();
        assert_eq!(p.a, q.a);
        assert_eq!(p.x0, q.x0);
        assert_eq!(p.y, q.y);
        assert_eq!(p.y, p.a.mul_vec(&p.x0).unwrap());
        assert_eq!(p.x0.iter().filter(|v| **v != 0.0).count(), 5);
        let r = make_instance(&suite, 40, 20, 5, 4, 99).unwrap();
        assert_ne!(p.seeds, r.seeds);
    }

    #[test]
    fn matrix_substream_is_isolated() {
        let suite = Suite::from_id(1).unwrap();
        let base = InstanceSeeds::from_trial_seed(1234);
        let other = InstanceSeeds {
            coefficients: InstanceSeeds::from_trial_seed(5678).coefficients,
            ..base
        };
        let p = build_instance(&suite, 30, 10, 4, base).unwrap();
        let q = build_instance(&suite, 30, 10, 4, other).unwrap();
        assert_eq!(p.a, q.a);
        assert_ne!(p.x0, q.x0);
    }
}
