use crate::datakit::SummaryLabels;
use crate::error::{Error, Result};
use crate::summarize::BinarySelection;

/// F-Score in percent between two frame selections of equal length.
pub fn fscore_masks(pred: &[bool], gt: &[bool]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidArgument(format!(
            "selection has {} frames, ground truth has {}",
            pred.len(),
            gt.len()
        )));
    }
    let hit = pred.iter().zip(gt).filter(|(p, g)| **p && **g).count();
    if hit == 0 {
        return Ok(0.0);
    }
    let p = hit as f64 / pred.iter().filter(|&&b| b).count() as f64;
    let r = hit as f64 / gt.iter().filter(|&&b| b).count() as f64;
    Ok(200.0 * p * r / (p + r))
}

/// F-Score (%) of a machine selection against one binary ground truth.
pub fn fscore_binary(pred: &BinarySelection, gt: &SummaryLabels) -> Result<f64> {
    fscore_masks(pred.mask(), &gt.mask())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(n: usize, idx: &[usize]) -> BinarySelection {
        BinarySelection::from_indices(n, idx)
    }

    fn gt(n: usize, idx: &[usize]) -> SummaryLabels {
        let mut v = vec![0.0; n];
        idx.iter().for_each(|&i| v[i] = 1.0);
        SummaryLabels::binary(v).unwrap()
    }

    #[test]
    fn hand_values() {
        assert_eq!(fscore_binary(&sel(5, &[1, 3]), &gt(5, &[1, 3])).unwrap(), 100.0);
        assert_eq!(fscore_binary(&sel(5, &[0]), &gt(5, &[1, 3])).unwrap(), 0.0);
        let f = fscore_binary(&sel(5, &[0, 1, 2]), &gt(5, &[1, 2, 3])).unwrap();
        assert!((f - 200.0 / 3.0).abs() < 1e-9);
        assert!(fscore_binary(&sel(4, &[0]), &gt(5, &[0])).is_err());
    }
}
