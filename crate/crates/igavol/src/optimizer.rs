//! Bounded derivative-free minimization: Nelder-Mead simplex run in an
//! unconstrained space, mapped into the box through a logistic transform.
//! Restarts around the incumbent reuse the remaining evaluation budget.

#[derive(Debug, Clone)]
pub(crate) struct OptimResult {
    pub x: Vec<f64>,
    pub fval: f64,
    pub converged: bool,
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub(crate) fn to_box(u: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&ui, (&l, &h))| l + (h - l) * sigmoid(ui))
        .collect()
}

pub(crate) fn from_box(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&xi, (&l, &h))| {
            let p = ((xi - l) / (h - l)).clamp(1e-9, 1.0 - 1e-9);
            logit(p)
        })
        .collect()
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const F_TOL: f64 = 1e-13;
const X_TOL: f64 = 1e-8;

/// Minimize `f` inside the box `[lo, hi]`, starting from `start` (box
/// coordinates). Runs Nelder-Mead in transform space, restarting with a
/// fresh simplex around the best point until the budget is exhausted.
pub(crate) fn minimize_bounded(
    f: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_evals: usize,
) -> OptimResult {
    let dim = start.len();
    debug_assert_eq!(lo.len(), dim);
    debug_assert_eq!(hi.len(), dim);

    let mut evals = 0usize;
    let eval = |u: &[f64], f: &mut dyn FnMut(&[f64]) -> f64, evals: &mut usize| {
        *evals += 1;
        let v = f(&to_box(u, lo, hi));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best_u = from_box(start, lo, hi);
    let mut best_f = eval(&best_u, f, &mut evals);
    let mut converged = false;
    // restart scales cycle so a collapsed simplex gets re-attacked both
    // coarser and finer; signs alternate per cycle
    const STEPS: [f64; 5] = [0.6, 0.15, 1.2, 0.04, 0.3];
    let mut restart = 0usize;
    let mut cycle_start_f = best_f;

    while evals < max_evals {
        // fresh simplex around the incumbent
        let step = STEPS[restart % STEPS.len()] * if restart % 2 == 0 { 1.0 } else { -1.0 };
        restart += 1;
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        let mut fvals: Vec<f64> = Vec::with_capacity(dim + 1);
        simplex.push(best_u.clone());
        fvals.push(best_f);
        for i in 0..dim {
            let mut p = best_u.clone();
            p[i] += step;
            simplex.push(p);
            fvals.push(eval(simplex.last().unwrap(), f, &mut evals));
            if evals >= max_evals {
                break;
            }
        }
        while simplex.len() < dim + 1 {
            // budget ran out mid-initialization; pad so the sort below works
            simplex.push(best_u.clone());
            fvals.push(best_f);
        }

        let mut stalled = false;
        while evals < max_evals {
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
            let best = order[0];
            let worst = order[dim];
            let second_worst = order[dim - 1];

            if fvals[best] < best_f {
                best_f = fvals[best];
                best_u = simplex[best].clone();
            }

            let f_spread = fvals[worst] - fvals[best];
            let x_spread = (0..dim)
                .map(|d| {
                    order
                        .iter()
                        .map(|&i| simplex[i][d])
                        .fold(f64::NEG_INFINITY, f64::max)
                        - order
                            .iter()
                            .map(|&i| simplex[i][d])
                            .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0f64, f64::max);
            if f_spread <= F_TOL * (1.0 + fvals[best].abs()) && x_spread <= X_TOL {
                stalled = true;
                break;
            }

            let centroid: Vec<f64> = (0..dim)
                .map(|d| {
                    order[..dim].iter().map(|&i| simplex[i][d]).sum::<f64>() / dim as f64
                })
                .collect();
            let dir: Vec<f64> = (0..dim)
                .map(|d| centroid[d] - simplex[worst][d])
                .collect();
            let at = |t: f64| -> Vec<f64> {
                (0..dim).map(|d| centroid[d] + t * dir[d]).collect()
            };

            let xr = at(REFLECT);
            let fr = eval(&xr, f, &mut evals);
            if fr < fvals[second_worst] && fr >= fvals[best] {
                simplex[worst] = xr;
                fvals[worst] = fr;
            } else if fr < fvals[best] {
                let xe = at(EXPAND);
                let fe = eval(&xe, f, &mut evals);
                if fe < fr {
                    simplex[worst] = xe;
                    fvals[worst] = fe;
                } else {
                    simplex[worst] = xr;
                    fvals[worst] = fr;
                }
            } else {
                let (xc, fc) = if fr < fvals[worst] {
                    let xc = at(CONTRACT);
                    let fc = eval(&xc, f, &mut evals);
                    (xc, fc)
                } else {
                    let xc = at(-CONTRACT);
                    let fc = eval(&xc, f, &mut evals);
                    (xc, fc)
                };
                if fc < fvals[worst].min(fr) {
                    simplex[worst] = xc;
                    fvals[worst] = fc;
                } else {
                    // shrink toward the best vertex
                    let anchor = simplex[best].clone();
                    for i in 0..=dim {
                        if i == best {
                            continue;
                        }
                        for d in 0..dim {
                            simplex[i][d] = anchor[d] + SHRINK * (simplex[i][d] - anchor[d]);
                        }
                        fvals[i] = eval(&simplex[i], f, &mut evals);
                        if evals >= max_evals {
                            break;
                        }
                    }
                }
            }
        }

        if !stalled {
            break; // budget exhausted inside the inner loop
        }
        // settled: a whole restart cycle brought no material improvement
        if best_f >= cycle_start_f - (1e-12 + 1e-9 * cycle_start_f.abs()) {
            converged = true;
        }
        cycle_start_f = best_f;
    }

    OptimResult {
        x: to_box(&best_u, lo, hi),
        fval: best_f,
        converged,
    }
}
