//! Experiment configuration, driver and result tables.

mod config;
mod output;

use std::path::Path;

use crate::linalg::C64;
use crate::multigrid::{run_multigrid, LevelState};
use crate::{Error, Result};

pub use config::{parse_complex, RunConfig};
pub use output::{emit_outputs, format_sig};

/// One reported eigenvalue `k = sqrt(lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenRow {
    pub level: usize,
    pub h: f64,
    /// 1-based position in tracking order.
    pub j: usize,
    pub k: C64,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub h: f64,
    pub j: usize,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub level: usize,
    pub h: f64,
    pub min_diagonal: f64,
    pub max_off_diagonal: f64,
    pub violated: bool,
    pub reduced_dim: usize,
    pub galerkin_residual: f64,
}

/// Everything written by [`emit_outputs`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportBundle {
    pub eigenvalues: Vec<EigenRow>,
    pub errors: Vec<ErrorRow>,
    /// `(j, slope)` for every eigenvalue with enough error points.
    pub orders: Vec<(usize, f64)>,
    pub diagnostics: Vec<DiagnosticRow>,
}

impl ReportBundle {
    /// Builds the tables from computed levels. Without `reference` the
    /// finest level serves as reference and is left out of the errors.
    pub fn from_levels(levels: &[LevelState], reference: Option<&[C64]>, record_time: bool) -> Self {
        let mut bundle = ReportBundle::default();
        for state in levels {
            for (i, &lam) in state.pairs.values.iter().enumerate() {
                bundle.eigenvalues.push(EigenRow {
                    level: state.level,
                    h: state.h,
                    j: i + 1,
                    k: principal_sqrt(lam),
                    residual: state.pairs.right_residuals.get(i).copied().unwrap_or(f64::NAN),
                    seconds: if record_time { state.seconds } else { 0.0 },
                });
            }
            let bi = &state.biorthogonality;
            bundle.diagnostics.push(DiagnosticRow {
                level: state.level,
                h: state.h,
                min_diagonal: bi.min_diagonal,
                max_off_diagonal: bi.max_off_diagonal,
                violated: bi.violated,
                reduced_dim: state.reduced_dim,
                galerkin_residual: state.galerkin_residual,
            });
        }
        let (refs, used): (Vec<C64>, &[LevelState]) = match (reference, levels.split_last()) {
            (Some(r), _) => (r.to_vec(), levels),
            (None, Some((last, rest))) => (last.pairs.values.iter().map(|&l| principal_sqrt(l)).collect(), rest),
            (None, None) => (Vec::new(), levels),
        };
        let width = refs.len().min(levels.iter().map(|s| s.pairs.len()).min().unwrap_or(0));
        for j in 0..width {
            let mut points = Vec::new();
            for state in used {
                let e = (principal_sqrt(state.pairs.values[j]) - refs[j]).norm();
                bundle.errors.push(ErrorRow {
                    h: state.h,
                    j: j + 1,
                    abs_error: e,
                });
                points.push((state.h, e));
            }
            if let Ok(slope) = convergence_order(&points) {
                bundle.orders.push((j + 1, slope));
            }
        }
        bundle
    }

    /// Reported `k` values of one level in tracking order.
    pub fn level_values(&self, level: usize) -> Vec<C64> {
        self.eigenvalues.iter().filter(|r| r.level == level).map(|r| r.k).collect()
    }
}

/// `sqrt(lambda)` on the branch with nonnegative real part.
pub fn principal_sqrt(lambda: C64) -> C64 {
    let k = lambda.sqrt();
    if k.re < 0.0 {
        -k
    } else {
        k
    }
}

/// Least-squares slope of `log e` against `log h` over the three finest
/// points with `e > 0`.
pub fn convergence_order(points: &[(f64, f64)]) -> Result<f64> {
    let mut usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(h, e)| h > 0.0 && e > 0.0 && e.is_finite())
        .collect();
    if usable.len() < 3 {
        return Err(Error::Config(format!(
            "convergence order needs 3 points with positive error, got {}",
            usable.len()
        )));
    }
    usable.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts: Vec<(f64, f64)> = usable[..3].iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Runs the configured scheme and writes all output files. On a solver
/// failure the levels finished so far are still written before the error
/// is returned.
pub fn run_experiment(config: &RunConfig) -> Result<ReportBundle> {
    config.validate()?;
    let run = run_multigrid(&config.multigrid());
    let bundle = ReportBundle::from_levels(&run.levels, config.reference.as_deref(), config.record_time);
    emit_outputs(&bundle, Path::new(&config.out))?;
    match run.error {
        Some(e) => Err(e),
        None => Ok(bundle),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar::c64;

    #[test]
    fn exact_fourth_order() {
        let pts: Vec<(f64, f64)> = (0..5).map(|m| 0.5f64.powi(m)).map(|h| (h, h.powi(4))).collect();
        assert!((convergence_order(&pts).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn finest_three_only() {
        let pts = [(1.0, 1e3), (0.5, 1.0), (0.25, 0.25), (0.125, 0.0625)];
        assert!((convergence_order(&pts).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(convergence_order(&[(0.5, 1.0), (0.25, 0.0), (0.125, 0.1)]).is_err());
    }

    #[test]
    fn sqrt_branch() {
        for lam in [c64(-4.0, 0.0), c64(-4.0, -0.0), c64(3.0, -2.0), c64(0.0, 1.0)] {
            let k = principal_sqrt(lam);
            assert!(k.re >= 0.0);
            assert!((k * k - lam).norm() <= 1e-12 * lam.norm());
        }
    }
}
