use crate::datakit::{LabelMode, SummaryLabels};
use crate::error::{Error, Result};
use crate::numkit::{Matrix, Real, Tape, Var};

/// Scores are clamped into `[BCE_CLAMP, 1 - BCE_CLAMP]` before the logarithm.
pub const BCE_CLAMP: f64 = 1e-7;

fn check_len<T: Real>(tape: &Tape<T>, scores: Var, n: usize) -> Result<()> {
    let shape = tape.value(scores).shape();
    if shape != (n, 1) {
        return Err(Error::Shape {
            op: "loss",
            left: shape,
            right: (n, 1),
        });
    }
    Ok(())
}

fn column<T: Real>(values: impl Iterator<Item = f64>, n: usize) -> Matrix<T> {
    Matrix::new(n, 1, values.map(T::from_f64).collect()).expect("labels are finite")
}

/// `-(1/N) Σ [y log f + (1-y) log(1-f)]` over an `N x 1` score column.
pub fn bce_loss<T: Real>(tape: &mut Tape<T>, scores: Var, labels: &SummaryLabels) -> Result<Var> {
    if labels.mode() != LabelMode::Binary {
        return Err(Error::InvalidArgument("BCE needs binary labels".into()));
    }
    let n = labels.len();
    check_len(tape, scores, n)?;
    let y = tape.constant(column(labels.values().iter().map(|&v| v as f64), n));
    let not_y = tape.constant(column(labels.values().iter().map(|&v| 1.0 - v as f64), n));
    let f = tape.clamp(
        scores,
        T::from_f64(BCE_CLAMP),
        T::one() - T::from_f64(BCE_CLAMP),
    );
    let log_f = tape.ln(f)?;
    let neg_f = tape.scale(f, -T::one())?;
    let one_minus_f = tape.add_scalar(neg_f, T::one())?;
    let log_1mf = tape.ln(one_minus_f)?;
    let pos = tape.mul(y, log_f)?;
    let neg = tape.mul(not_y, log_1mf)?;
    let total = tape.add(pos, neg)?;
    let mean = tape.mean(total);
    tape.scale(mean, -T::one())
}

/// `(1/N) Σ (f - t)²`.
pub fn mse_loss<T: Real>(tape: &mut Tape<T>, scores: Var, target: &SummaryLabels) -> Result<Var> {
    let n = target.len();
    check_len(tape, scores, n)?;
    let t = tape.constant(column(target.values().iter().map(|&v| v as f64), n));
    let diff = tape.sub(scores, t)?;
    let sq = tape.mul(diff, diff)?;
    Ok(tape.mean(sq))
}

/// Frame-wise mean of several binary ground truths.
pub fn average_ground_truth(summaries: &[&SummaryLabels]) -> Result<SummaryLabels> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::InvalidArgument("no summaries to average".into()))?;
    let n = first.len();
    if summaries.iter().any(|s| s.len() != n) {
        return Err(Error::InvalidArgument("summaries differ in length".into()));
    }
    let k = summaries.len() as f64;
    let values = (0..n)
        .map(|i| (summaries.iter().map(|s| s.values()[i] as f64).sum::<f64>() / k) as f32)
        .collect();
    SummaryLabels::averaged(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_bce(f: &[f64], y: &[f32]) -> f64 {
        let mut t = Tape::<f64>::new();
        let s = t.constant(Matrix::new(f.len(), 1, f.to_vec()).unwrap());
        let l = bce_loss(&mut t, s, &SummaryLabels::binary(y.to_vec()).unwrap()).unwrap();
        t.scalar(l)
    }

    #[test]
    fn bce_values() {
        // -(ln 0.9 + ln 0.9) / 2
        assert!((eval_bce(&[0.9, 0.1], &[1.0, 0.0]) - 0.105_360_5).abs() < 1e-6);
        assert!((eval_bce(&[0.5, 0.5, 0.5], &[1.0, 0.0, 1.0]) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(eval_bce(&[1.0, 0.0], &[1.0, 0.0]) <= 1.7e-5);
    }

    #[test]
    fn bce_perfect_prediction_in_f32() {
        let mut t = Tape::<f32>::new();
        let s = t.constant(Matrix::new(2, 1, vec![1.0, 0.0]).unwrap());
        let l = bce_loss(&mut t, s, &SummaryLabels::binary(vec![1.0, 0.0]).unwrap()).unwrap();
        assert!(t.scalar(l) <= 1.7e-5);
    }

    #[test]
    fn bce_errors() {
        let mut t = Tape::<f64>::new();
        let s = t.constant(Matrix::filled(3, 1, 0.5));
        assert!(bce_loss(&mut t, s, &SummaryLabels::binary(vec![1.0, 0.0]).unwrap()).is_err());
        let avg = SummaryLabels::averaged(vec![0.5, 0.5, 0.5]).unwrap();
        assert!(bce_loss(&mut t, s, &avg).is_err());
    }

    #[test]
    fn mse_values() {
        let run = |f: Vec<f64>, target: Vec<f32>| {
            let mut t = Tape::<f64>::new();
            let s = t.constant(Matrix::new(f.len(), 1, f).unwrap());
            let l = mse_loss(&mut t, s, &SummaryLabels::averaged(target).unwrap()).unwrap();
            t.scalar(l)
        };
        assert_eq!(run(vec![0.25, 0.5], vec![0.25, 0.5]), 0.0);
        assert_eq!(run(vec![1.0, 0.0], vec![0.0, 1.0]), 1.0);
        // (0.1² + 0.3²) / 2, target stored as f32
        assert!((run(vec![0.6, 0.2], vec![0.5, 0.5]) - 0.05).abs() < 1e-7);
    }

    #[test]
    fn averaging() {
        let a = SummaryLabels::binary(vec![1.0, 0.0]).unwrap();
        let b = SummaryLabels::binary(vec![0.0, 1.0]).unwrap();
        assert_eq!(average_ground_truth(&[&a]).unwrap().values(), a.values());
        assert_eq!(average_ground_truth(&[&a, &b]).unwrap().values(), &[0.5, 0.5]);

        let many: Vec<SummaryLabels> = (0..10)
            .map(|i| SummaryLabels::binary(vec![if i < 7 { 1.0 } else { 0.0 }, 1.0]).unwrap())
            .collect();
        let refs: Vec<&SummaryLabels> = many.iter().collect();
        let avg = average_ground_truth(&refs).unwrap();
        assert!((avg.values()[0] - 0.7).abs() < 1e-7);

        let short = SummaryLabels::binary(vec![1.0]).unwrap();
        assert!(average_ground_truth(&[&a, &short]).is_err());
        assert!(average_ground_truth(&[]).is_err());
    }
}
