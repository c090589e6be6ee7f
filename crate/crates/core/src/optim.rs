//! Derivative-free minimisation (Nelder–Mead simplex).

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when the spread of objective values across the simplex falls
    /// below `ftol * (1 + |f_best|)`.
    pub ftol: f64,
    /// ...and the simplex diameter falls below `xtol`.
    pub xtol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iterations: 500,
            ftol: 1e-10,
            xtol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimises `f` from `x0`, building the initial simplex by stepping
/// `steps[i]` along each coordinate. Non-finite objective values are treated
/// as `+inf`, so infeasible regions are simply avoided.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    assert_eq!(steps.len(), n, "one initial step per coordinate");
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let fx = eval(&x);
        simplex.push((x, fx));
    }
    if n == 0 {
        let (x, fx) = simplex.pop().unwrap();
        return Minimum {
            x,
            fx,
            iterations: 0,
            evaluations,
            converged: true,
        };
    }

    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.ftol * (1.0 + best.abs()) && diameter <= opts.xtol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let xr = lerp(&centroid, &simplex[n].0, -REFLECT);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &simplex[n].0, -EXPAND);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        // contraction: outside if the reflection improved on the worst point
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = lerp(&centroid, &xr, CONTRACT);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = lerp(&centroid, &simplex[n].0, CONTRACT);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            *x = lerp(&x_best, x, SHRINK);
            *fx = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum {
        x,
        fx,
        iterations,
        evaluations,
        converged,
    }
}
