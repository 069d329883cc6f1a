use crate::{Error, Result};

/// Base-2 radical inverse of `i`.
pub fn van_der_corput(mut i: u64) -> f64 {
    let mut inv = 0.5;
    let mut x = 0.0;
    while i > 0 {
        if i & 1 == 1 {
            x += inv;
        }
        inv *= 0.5;
        i >>= 1;
    }
    x
}

/// Hammersley point set on `[0,1)^2`: point `i` is `(i/count, vdc(i))`.
pub fn hammersley(count: usize, dim: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::usage("hammersley needs at least one point"));
    }
    if dim != 2 {
        return Err(Error::usage(format!("hammersley supports dim = 2, got {dim}")));
    }
    Ok((0..count).map(|i| vec![i as f64 / count as f64, van_der_corput(i as u64)]).collect())
}

/// `count` equispaced points including both ends.
pub fn uniform_grid_1d(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / (count - 1) as f64;
            (0..count).map(|i| if i + 1 == count { hi } else { lo + h * i as f64 }).collect()
        }
    }
}

/// Tensor grid, `x` varying fastest.
pub fn uniform_grid_2d(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Vec<Vec<f64>> {
    let xs = uniform_grid_1d(x.0, x.1, nx);
    let ys = uniform_grid_1d(y.0, y.1, ny);
    ys.iter().flat_map(|&yv| xs.iter().map(move |&xv| vec![xv, yv])).collect()
}

/// Star discrepancy of a 2D point set in the unit square, evaluated over
/// anchored boxes whose corners lie on the point coordinates (and 1).
///
/// Both open and closed boxes are counted, which gives the exact value for
/// the grid of candidate corners. Cost is cubic in the point count.
pub fn star_discrepancy(points: &[Vec<f64>]) -> f64 {
    let n = points.len() as f64;
    let mut xs: Vec<f64> = points.iter().map(|p| p[0]).chain([1.0]).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p[1]).chain([1.0]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    xs.dedup();
    ys.dedup();
    let mut worst: f64 = 0.0;
    for &bx in &xs {
        for &by in &ys {
            let vol = bx * by;
            let (mut open, mut closed) = (0usize, 0usize);
            for p in points {
                if p[0] <= bx && p[1] <= by {
                    closed += 1;
                    if p[0] < bx && p[1] < by {
                        open += 1;
                    }
                }
            }
            worst = worst.max(vol - open as f64 / n).max(closed as f64 / n - vol);
        }
    }
    worst
}
