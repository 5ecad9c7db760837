//! Nelder–Mead downhill simplex for low-dimensional derivative-free search.

#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimises `f` from `start`, stopping once the best value is `<= target`,
/// the simplex collapses, or `max_iters` iterations have run.
pub(crate) fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    step: &[f64],
    target: f64,
    max_iters: usize,
) -> SimplexResult {
    let n = start.len();
    let eval = |f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    for d in 0..n {
        let mut p = start.to_vec();
        p[d] += step[d];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(&mut f, p)).collect();

    let mut iterations = 0;
    while iterations < max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&k| pts[k].clone()).collect();
        vals = order.iter().map(|&k| vals[k]).collect();

        if vals[0] <= target {
            break;
        }
        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let scale = pts[0].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if diameter <= 1e-15 * scale {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|d| pts[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let worst = pts[n].clone();
        let reflected = along(1.0, &worst);
        let f_r = eval(&mut f, &reflected);
        if f_r < vals[0] {
            let expanded = along(2.0, &worst);
            let f_e = eval(&mut f, &expanded);
            if f_e < f_r {
                pts[n] = expanded;
                vals[n] = f_e;
            } else {
                pts[n] = reflected;
                vals[n] = f_r;
            }
            continue;
        }
        if f_r < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < vals[n] {
            let c = along(0.5, &worst);
            let v = eval(&mut f, &c);
            (c, v)
        } else {
            let c = along(-0.5, &worst);
            let v = eval(&mut f, &c);
            (c, v)
        };
        if f_c < vals[n].min(f_r) {
            pts[n] = contracted;
            vals[n] = f_c;
            continue;
        }
        // Shrink towards the best point.
        let best = pts[0].clone();
        for k in 1..=n {
            for d in 0..n {
                pts[k][d] = best[d] + 0.5 * (pts[k][d] - best[d]);
            }
            vals[k] = eval(&mut f, &pts[k]);
        }
    }

    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    SimplexResult {
        point: pts[best].clone(),
        value: vals[best],
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_abs_root() {
        let r = nelder_mead(|x| (x[0] - 1.2345).abs(), &[0.0], &[0.5], 1e-10, 500);
        assert!((r.point[0] - 1.2345).abs() <= 1e-10, "{r:?}");
    }

    #[test]
    fn two_dimensional_norm() {
        let r = nelder_mead(
            |x| ((x[0] + 1.0).powi(2) + (2.0 * (x[1] - 0.3)).powi(2)).sqrt(),
            &[0.0, 0.0],
            &[0.5, 0.5],
            1e-9,
            2000,
        );
        assert!(r.value <= 1e-9, "{r:?}");
    }

    #[test]
    fn rosenbrock() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
            1e-14,
            5000,
        );
        assert!((r.point[0] - 1.0).abs() < 1e-5 && (r.point[1] - 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn nan_treated_as_infinite() {
        let r = nelder_mead(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).abs() },
            &[1.0],
            &[0.5],
            1e-9,
            500,
        );
        assert!((r.point[0] - 0.5).abs() < 1e-9);
    }
}
