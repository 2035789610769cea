//! Nelder-Mead simplex minimization on an unconstrained domain.

/// Outcome of one simplex run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    /// Simplex diameter fell below the tolerance.
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect()
}

/// Largest max-norm distance from the best vertex to any other vertex.
fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Minimizes `f` starting from an axis-aligned simplex of edge `step` at
/// `x0`. Stops when the simplex diameter drops below `tol` or after
/// `max_iter` iterations. NaN objective values are treated as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], step: f64, max_iter: usize, tol: f64) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(&mut f, v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=dim).collect();
        // Stable sort keeps ties in insertion order.
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if diameter(&simplex) < tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let worst = dim;
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();

        let reflected = affine(&centroid, &simplex[worst], -REFLECT);
        let f_r = eval(&mut f, &reflected);

        if f_r < values[0] {
            let expanded = affine(&centroid, &simplex[worst], -EXPAND);
            let f_e = eval(&mut f, &expanded);
            if f_e < f_r {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
            continue;
        }
        if f_r < values[dim - 1] {
            simplex[worst] = reflected;
            values[worst] = f_r;
            continue;
        }

        let (contracted, f_c) = if f_r < values[worst] {
            let c = affine(&centroid, &reflected, CONTRACT);
            let fc = eval(&mut f, &c);
            (c, fc)
        } else {
            let c = affine(&centroid, &simplex[worst], CONTRACT);
            let fc = eval(&mut f, &c);
            (c, fc)
        };
        if f_c < values[worst].min(f_r) {
            simplex[worst] = contracted;
            values[worst] = f_c;
            continue;
        }

        for i in 1..=dim {
            simplex[i] = affine(&simplex[0], &simplex[i], SHRINK);
            values[i] = eval(&mut f, &simplex[i]);
        }
    }

    SimplexResult {
        x: simplex[0].clone(),
        fx: values[0],
        iterations,
        converged,
    }
}
