//! Deterministic Nelder-Mead simplex minimizer used by the fitter and the
//! ladder optimizer. Standard coefficients (reflect 1, expand 2, contract
//! 0.5, shrink 0.5), best-ever tracking, and index-stable tie-breaking so a
//! given start always walks the same path.

/// Result of a simplex run.
#[derive(Debug, Clone)]
pub(crate) struct MinimizeResult {
    pub x: Vec<f64>,
    pub cost: f64,
    #[allow(dead_code)] // callers count their own outer-loop passes
    pub iterations: usize,
    /// true when the relative cost spread fell below tolerance before the
    /// iteration budget ran out.
    #[allow(dead_code)] // callers track their own outer-loop convergence
    pub converged: bool,
}

pub(crate) struct Options {
    pub max_iterations: usize,
    /// relative spread of simplex costs at which to stop
    pub cost_tolerance: f64,
    /// per-coordinate absolute offsets for the initial simplex
    pub initial_steps: Vec<f64>,
}

/// Minimizes `f` starting from `x0`. The initial simplex is `x0` plus one
/// vertex per coordinate offset. `f` must return finite values or +inf for
/// out-of-domain points.
pub(crate) fn minimize<F>(mut f: F, x0: &[f64], opts: &Options) -> MinimizeResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n >= 1, "need at least one coordinate");
    assert_eq!(opts.initial_steps.len(), n, "one step per coordinate");

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_steps[i];
        simplex.push(v);
    }
    let mut costs: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut best_x = simplex[0].clone();
    let mut best_cost = costs[0];
    for (v, &c) in simplex.iter().zip(&costs).skip(1) {
        if c < best_cost {
            best_cost = c;
            best_x = v.clone();
        }
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        // sort by cost, ties by original index for determinism
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = (costs[worst] - costs[best]).abs();
        let scale = costs[best].abs().max(costs[worst].abs()).max(1e-300);
        if spread <= opts.cost_tolerance * scale {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, &xi) in centroid.iter_mut().zip(&simplex[i]) {
                *c += xi;
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(&c, &w)| c + (c - w))
            .collect();
        let f_reflect = f(&reflect);
        if f_reflect < best_cost {
            best_cost = f_reflect;
            best_x = reflect.clone();
        }

        if f_reflect < costs[best] {
            // try to expand
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| c + 2.0 * (c - w))
                .collect();
            let f_expand = f(&expand);
            if f_expand < best_cost {
                best_cost = f_expand;
                best_x = expand.clone();
            }
            if f_expand < f_reflect {
                simplex[worst] = expand;
                costs[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                costs[worst] = f_reflect;
            }
            continue;
        }

        if f_reflect < costs[second_worst] {
            simplex[worst] = reflect;
            costs[worst] = f_reflect;
            continue;
        }

        // contract toward the better of worst/reflected
        let (toward, f_toward) = if f_reflect < costs[worst] {
            (&reflect, f_reflect)
        } else {
            (&simplex[worst], costs[worst])
        };
        let contract: Vec<f64> = centroid
            .iter()
            .zip(toward)
            .map(|(&c, &t)| c + 0.5 * (t - c))
            .collect();
        let f_contract = f(&contract);
        if f_contract < best_cost {
            best_cost = f_contract;
            best_x = contract.clone();
        }
        if f_contract < f_toward {
            simplex[worst] = contract;
            costs[worst] = f_contract;
            continue;
        }

        // shrink everything toward the best vertex
        let anchor = simplex[best].clone();
        for &i in order.iter().skip(1) {
            let v: Vec<f64> = anchor
                .iter()
                .zip(&simplex[i])
                .map(|(&a, &xi)| a + 0.5 * (xi - a))
                .collect();
            let c = f(&v);
            if c < best_cost {
                best_cost = c;
                best_x = v.clone();
            }
            simplex[i] = v;
            costs[i] = c;
        }
    }

    MinimizeResult {
        x: best_x,
        cost: best_cost,
        iterations,
        converged,
    }
}
