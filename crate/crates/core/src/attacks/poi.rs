use serde::{Deserialize, Serialize};

use super::AttackError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoiSelection {
    /// Strictly increasing feature indices.
    pub indices: Vec<usize>,
    /// Fewer than the requested number of points survived the exclusion
    /// windows.
    pub shortfall: bool,
}

/// Localized top-K: repeatedly take the feature with the largest DOM (ties to
/// the lowest index) and exclude every feature within `round(alpha · n)` of
/// it, until `p` picks or nothing is left.
pub fn select_pois(dom: &[f64], p: usize, alpha: f64) -> Result<PoiSelection, AttackError> {
    if p == 0 {
        return Err(AttackError::InvalidParameter("need at least one POI".into()));
    }
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(AttackError::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if dom.iter().any(|d| d.is_nan()) {
        return Err(AttackError::InvalidParameter("DOM curve contains NaN".into()));
    }
    let n = dom.len();
    let radius = (alpha * n as f64).round() as usize;
    let mut free = vec![true; n];
    let mut picks = Vec::with_capacity(p);
    while picks.len() < p {
        let mut best: Option<usize> = None;
        for i in (0..n).filter(|&i| free[i]) {
            if best.is_none_or(|b| dom[i] > dom[b]) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        picks.push(b);
        let lo = b.saturating_sub(radius);
        let hi = (b + radius).min(n - 1);
        free[lo..=hi].iter_mut().for_each(|f| *f = false);
    }
    let shortfall = picks.len() < p;
    picks.sort_unstable();
    Ok(PoiSelection {
        indices: picks,
        shortfall,
    })
}

/// [`select_pois`] on `|mean1 − mean0|`.
pub fn select_pois_from_means(
    mean0: &[f64],
    mean1: &[f64],
    p: usize,
    alpha: f64,
) -> Result<PoiSelection, AttackError> {
    if mean0.len() != mean1.len() {
        return Err(AttackError::InvalidParameter(
            "class means have different lengths".into(),
        ));
    }
    let dom: Vec<f64> = mean0.iter().zip(mean1).map(|(a, b)| (b - a).abs()).collect();
    select_pois(&dom, p, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_difference() {
        let mut d = vec![0.0; 50];
        d[17] = 0.3;
        assert_eq!(select_pois(&d, 1, 0.01).unwrap().indices, [17]);
    }

    #[test]
    fn two_lobes() {
        let d: Vec<f64> = (0..200)
            .map(|i| {
                let i = i as f64;
                (-((i - 40.0) / 3.0).powi(2)).exp() + 0.8 * (-((i - 150.0) / 3.0).powi(2)).exp()
            })
            .collect();
        let s = select_pois(&d, 2, 0.05).unwrap();
        assert_eq!(s.indices, [40, 150]);
        assert!(!s.shortfall);
    }

    #[test]
    fn shortfall_flag() {
        let d = vec![1.0; 10];
        let s = select_pois(&d, 5, 0.5).unwrap();
        assert!(s.shortfall);
        assert_eq!(s.indices, [0, 6]);
        assert!(select_pois(&d, 0, 0.1).is_err());
        assert!(select_pois(&d, 1, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn alpha_zero_is_a_full_sort(d in prop::collection::vec(0.0f64..1.0, 1..80)) {
            let s = select_pois(&d, d.len(), 0.0).unwrap();
            prop_assert!(!s.shortfall);
            prop_assert_eq!(s.indices, (0..d.len()).collect::<Vec<_>>());
            let p = (d.len() / 3).max(1);
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
            let mut top = order[..p].to_vec();
            top.sort_unstable();
            prop_assert_eq!(select_pois(&d, p, 0.0).unwrap().indices, top);
        }
    }
}
