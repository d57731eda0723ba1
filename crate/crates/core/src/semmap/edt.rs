//! Exact squared Euclidean distance transform (lower envelope of parabolas),
//! one pass over columns and one over rows.

/// Squared distance, in cells, from every cell to the nearest site.
/// `f64::INFINITY` everywhere when there are no sites.
pub fn squared_edt(width: usize, height: usize, is_site: impl Fn(usize) -> bool) -> Vec<f64> {
    let n = width * height;
    let mut grid: Vec<f64> = (0..n).map(|i| if is_site(i) { 0.0 } else { f64::INFINITY }).collect();
    let mut scratch = Envelope::new(width.max(height));

    let mut column = vec![0.0; height];
    let mut out = vec![0.0; height];
    for x in 0..width {
        for y in 0..height {
            column[y] = grid[y * width + x];
        }
        scratch.transform(&column, &mut out);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }

    let mut row_out = vec![0.0; width];
    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        scratch.transform(row, &mut row_out);
        row.copy_from_slice(&row_out);
    }
    grid
}

struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn new(n: usize) -> Self {
        Envelope {
            vertices: vec![0; n],
            bounds: vec![0.0; n + 1],
        }
    }

    /// `out[q] = min_p (q - p)^2 + f[p]`
    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        let Some(first) = f.iter().position(|v| v.is_finite()) else {
            out[..n].fill(f64::INFINITY);
            return;
        };
        let v = &mut self.vertices;
        let z = &mut self.bounds;
        let intersect = |q: usize, p: usize| {
            let (qf, pf) = (q as f64, p as f64);
            ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
        };

        let mut k = 0;
        v[0] = first;
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        for q in first + 1..n {
            if !f[q].is_finite() {
                continue;
            }
            let mut s = intersect(q, v[k]);
            while s <= z[k] {
                k -= 1;
                s = intersect(q, v[k]);
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }

        let mut j = 0;
        for (q, slot) in out.iter_mut().enumerate().take(n) {
            while z[j + 1] < q as f64 {
                j += 1;
            }
            let d = q as f64 - v[j] as f64;
            *slot = d * d + f[v[j]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(width: usize, height: usize, sites: &[usize]) -> Vec<f64> {
        (0..width * height)
            .map(|i| {
                let (x, y) = ((i % width) as f64, (i / width) as f64);
                sites
                    .iter()
                    .map(|&s| {
                        let (sx, sy) = ((s % width) as f64, (s / width) as f64);
                        (x - sx).powi(2) + (y - sy).powi(2)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn single_site() {
        let d = squared_edt(5, 4, |i| i == 7);
        assert_eq!(d, brute(5, 4, &[7]));
        assert_eq!(d[7], 0.0);
        assert_eq!(d[0], 5.0);
    }

    #[test]
    fn no_sites() {
        assert!(squared_edt(3, 3, |_| false).iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn scattered_sites_match_brute_force() {
        let sites = [0, 13, 14, 40, 77, 99];
        let d = squared_edt(10, 10, |i| sites.contains(&i));
        assert_eq!(d, brute(10, 10, &sites));
        let d = squared_edt(1, 9, |i| i == 4);
        assert_eq!(d, brute(1, 9, &[4]));
    }
}
