//! Convergence detectors over a learning curve.

use super::EvalPoint;

/// Convergence-ST: the first evaluation point whose loss count is matched,
/// within `tolerance`, by each of the next `window` points.
pub fn detect_convergence_st(curve: &[EvalPoint], window: usize, tolerance: u64) -> Option<u64> {
    let losses: Vec<u64> = curve.iter().map(|p| p.teacher_wins).collect();
    (0..losses.len().saturating_sub(window)).find_map(|i| {
        let base = losses[i];
        losses[i + 1..=i + window].iter().all(|&l| l.abs_diff(base) <= tolerance).then_some(curve[i].episode)
    })
}

/// Convergence-FS: the first point starting `window` consecutive zero-loss
/// points, after which every point in the next `confirm_episodes` episodes
/// is also loss-free. A run that has not yet covered the confirmation
/// stretch is not converged.
pub fn detect_convergence_fs(curve: &[EvalPoint], window: usize, confirm_episodes: u64) -> Option<u64> {
    let window = window.max(1);
    let mut i = 0;
    while i + window <= curve.len() {
        if let Some(off) = curve[i..i + window].iter().position(|p| p.teacher_wins > 0) {
            i += off + 1;
            continue;
        }
        let window_end = curve[i + window - 1].episode;
        let horizon = window_end + confirm_episodes;
        if curve.last().map_or(true, |p| p.episode < horizon) {
            return None;
        }
        match curve[i + window..].iter().take_while(|p| p.episode <= horizon).position(|p| p.teacher_wins > 0) {
            None => return Some(curve[i].episode),
            Some(off) => i += window + off + 1,
        }
    }
    None
}

/// Whether losses trend down or stay flat: the least-squares slope of
/// losses over episodes is not positive and the last quarter of the curve
/// loses no more on average than the first quarter.
pub fn loss_trend_non_increasing(curve: &[EvalPoint]) -> bool {
    if curve.len() < 2 {
        return true;
    }
    let n = curve.len() as f64;
    let xs: Vec<f64> = curve.iter().map(|p| p.episode as f64).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.teacher_wins as f64).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let quarter = (curve.len() / 4).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    cov <= 0.0 && mean(&ys[ys.len() - quarter..]) <= mean(&ys[..quarter])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(losses: &[u64]) -> Vec<EvalPoint> {
        losses
            .iter()
            .enumerate()
            .map(|(i, &l)| EvalPoint {
                episode: (i as u64 + 1) * 100,
                learner_wins: 0,
                teacher_wins: l,
                draws: 100 - l,
            })
            .collect()
    }

    #[test]
    fn st_constant_curve_converges_at_first_point() {
        assert_eq!(detect_convergence_st(&curve(&[7; 21]), 20, 1), Some(100));
        // One point short of a full window.
        assert_eq!(detect_convergence_st(&curve(&[7; 20]), 20, 1), None);
    }

    #[test]
    fn st_settles_on_first_five() {
        let mut l = vec![30, 10];
        l.extend([5; 25]);
        assert_eq!(detect_convergence_st(&curve(&l), 20, 1), Some(300));
    }

    #[test]
    fn st_tolerates_fluctuation_of_one() {
        let l: Vec<u64> = (0..30).map(|i| 5 + (i % 2)).collect();
        assert_eq!(detect_convergence_st(&curve(&l), 20, 1), Some(100));
        let l: Vec<u64> = (0..30).map(|i| 5 + 2 * (i % 2)).collect();
        assert_eq!(detect_convergence_st(&curve(&l), 20, 1), None);
    }

    #[test]
    fn st_never_on_steady_decline() {
        let l: Vec<u64> = (0..40).map(|i| 100 - 2 * i).collect();
        assert_eq!(detect_convergence_st(&curve(&l), 20, 1), None);
    }

    #[test]
    fn fs_first_zero_window_start() {
        let mut l = vec![9, 4, 1];
        l.extend([0; 80]);
        assert_eq!(detect_convergence_fs(&curve(&l), 20, 5000), Some(400));
        assert_eq!(detect_convergence_fs(&curve(&l), 20, 0), Some(400));
    }

    #[test]
    fn fs_nineteen_zeros_then_a_loss() {
        let mut l = vec![0; 19];
        l.push(1);
        assert_eq!(detect_convergence_fs(&curve(&l), 20, 0), None);
        l.extend([0; 20]);
        assert_eq!(detect_convergence_fs(&curve(&l), 20, 0), Some(2100));
    }

    #[test]
    fn fs_needs_full_confirmation() {
        // Window ends at 2000; confirmation must reach 7000.
        assert_eq!(detect_convergence_fs(&curve(&[0; 69]), 20, 5000), None);
        assert_eq!(detect_convergence_fs(&curve(&[0; 70]), 20, 5000), Some(100));
    }

    #[test]
    fn fs_loss_during_confirmation_restarts_search() {
        let mut l = vec![0; 30];
        l.push(2);
        l.extend([0; 80]);
        assert_eq!(detect_convergence_fs(&curve(&l), 20, 5000), Some(3200));
    }

    #[test]
    fn fs_implies_earlier_st() {
        let mut l = vec![50, 20, 12, 3, 1, 1, 2];
        l.extend([0; 75]);
        let c = curve(&l);
        let fs = detect_convergence_fs(&c, 20, 5000).unwrap();
        let st = detect_convergence_st(&c, 20, 1).unwrap();
        assert!(st <= fs);
    }

    #[test]
    fn trend() {
        assert!(loss_trend_non_increasing(&curve(&[50, 40, 45, 30, 20, 22, 10, 5])));
        assert!(loss_trend_non_increasing(&curve(&[3; 10])));
        assert!(!loss_trend_non_increasing(&curve(&[5, 10, 20, 30])));
    }
}
