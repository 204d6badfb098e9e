//! Central finite-difference gradient checking.
//!
//! Checks run in `f64`. The error for one entry is
//! `|analytic - numeric| / max(|analytic|, |numeric|, REL_FLOOR)`; the floor
//! keeps gradients that are zero up to roundoff from producing spurious
//! relative blow-ups.

use crate::error::{Error, Result};
use crate::numkit::matrix::Matrix;
use crate::numkit::tape::{Tape, Var};

/// Denominator floor of the relative error.
pub const REL_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct ParamReport {
    pub index: usize,
    pub max_rel_error: f64,
    /// (row, col, analytic, numeric) of the worst entry.
    pub worst: (usize, usize, f64, f64),
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub params: Vec<ParamReport>,
    pub max_rel_error: f64,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tol
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn evaluate<F>(f: &F, params: &[Matrix<f64>]) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    Ok(tape.scalar(loss))
}

fn check_args(eps: f64) -> Result<()> {
    if !(1e-5..=1e-2).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {eps} outside [1e-5, 1e-2]"
        )));
    }
    Ok(())
}

/// Compares the tape's gradient of `f` against central differences for
/// every entry of every parameter. `f` builds a scalar loss from the
/// registered parameter vars and must be deterministic.
pub fn grad_check<F>(f: F, params: &[Matrix<f64>], eps: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    check_args(eps)?;
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Matrix<f64>> = vars
        .iter()
        .zip(params)
        .map(|(&v, p)| grads.get_or_zeros(v, p.shape()))
        .collect();
    check_against(f, params, &analytic, eps, tol)
}

/// Like [`grad_check`] but with caller-supplied analytic gradients.
pub fn check_against<F>(
    f: F,
    params: &[Matrix<f64>],
    analytic: &[Matrix<f64>],
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    check_args(eps)?;
    if analytic.len() != params.len() {
        return Err(Error::InvalidArgument("one gradient per parameter".into()));
    }
    let first = evaluate(&f, params)?;
    let second = evaluate(&f, params)?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::InvalidArgument(format!(
            "function is not deterministic: {first} vs {second}"
        )));
    }

    let mut work: Vec<Matrix<f64>> = params.to_vec();
    let mut reports = Vec::with_capacity(params.len());
    for (pi, grad) in analytic.iter().enumerate() {
        if grad.shape() != params[pi].shape() {
            return Err(Error::Shape {
                op: "grad_check",
                left: params[pi].shape(),
                right: grad.shape(),
            });
        }
        let mut report = ParamReport {
            index: pi,
            max_rel_error: 0.0,
            worst: (0, 0, 0.0, 0.0),
        };
        let (rows, cols) = params[pi].shape();
        for r in 0..rows {
            for c in 0..cols {
                let orig = params[pi].get(r, c);
                work[pi].set(r, c, orig + eps);
                let plus = evaluate(&f, &work)?;
                work[pi].set(r, c, orig - eps);
                let minus = evaluate(&f, &work)?;
                work[pi].set(r, c, orig);
                let numeric = (plus - minus) / (2.0 * eps);
                let a = grad.get(r, c);
                let err = relative_error(a, numeric);
                if err > report.max_rel_error {
                    report.max_rel_error = err;
                    report.worst = (r, c, a, numeric);
                }
            }
        }
        reports.push(report);
    }
    let max_rel_error = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        params: reports,
        max_rel_error,
        tol,
    })
}
