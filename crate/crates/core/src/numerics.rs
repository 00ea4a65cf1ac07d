//! Small dense numerical kernels shared by every module: Perron data of
//! nonnegative matrices, one-dimensional searches, compensated sums and
//! graph connectivity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration cap for every power iteration in the crate.
pub const POWER_ITERATION_CAP: usize = 100_000;

/// Perron root (in log form) and the matching left/right eigenvectors.
///
/// `right` sums to one; `left` is scaled so that `left · right = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perron {
    pub log_value: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub iterations: usize,
}

impl Perron {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn max_entry(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |m, &x| m.max(x))
}

/// Rough spectral radius from `||A^(2^J)||^(1/2^J)`, used only to pick the
/// shift that makes the power iteration aperiodic.
fn rough_spectral_radius(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let squarings = if n <= 64 { 8 } else { 5 };
    let mut cur = m.to_vec();
    let mut log_scale = 0.0;
    for _ in 0..squarings {
        let p = mat_mul(&cur, &cur);
        let norm = max_entry(&p);
        if norm == 0.0 {
            return 0.0;
        }
        log_scale = 2.0 * log_scale + norm.ln();
        cur = p
            .into_iter()
            .map(|r| r.into_iter().map(|x| x / norm).collect())
            .collect();
    }
    (log_scale / f64::from(1u32 << squarings)).exp()
}

fn power_vector(m: &[Vec<f64>], shift: f64, transpose: bool) -> Result<(Vec<f64>, usize)> {
    let n = m.len();
    let tol = 1e-15 * (4.0 + n as f64);
    let mut v = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for it in 1..=POWER_ITERATION_CAP {
        for (i, slot) in next.iter_mut().enumerate() {
            let mut acc = shift * v[i];
            if transpose {
                for (j, vj) in v.iter().enumerate() {
                    acc += m[j][i] * vj;
                }
            } else {
                for (j, vj) in v.iter().enumerate() {
                    acc += m[i][j] * vj;
                }
            }
            *slot = acc;
        }
        let total: f64 = next.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NonConvergence {
                what: "power iteration",
                iterations: it,
            });
        }
        // componentwise relative test: tiny entries can still carry the root
        let mut converged = true;
        for i in 0..n {
            next[i] /= total;
            if (next[i] - v[i]).abs() > tol * next[i] {
                converged = false;
            }
        }
        std::mem::swap(&mut v, &mut next);
        if converged {
            return Ok((v, it));
        }
    }
    Err(Error::NonConvergence {
        what: "power iteration",
        iterations: POWER_ITERATION_CAP,
    })
}

fn support_lists(a: &[Vec<f64>]) -> Vec<Vec<usize>> {
    a.iter()
        .map(|r| (0..r.len()).filter(|&j| r[j] > 0.0).collect())
        .collect()
}

fn check_square(a: &[Vec<f64>]) -> Result<()> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("perron: matrix must be square and nonempty".into()));
    }
    if a.iter().flatten().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidInput("perron: entries must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Perron data of an irreducible nonnegative square matrix by shifted power
/// iteration.
///
/// The matrix is scaled by its largest entry and shifted by a rough estimate
/// of its spectral radius, so periodic (imprimitive) matrices converge too.
pub fn perron(a: &[Vec<f64>]) -> Result<Perron> {
    check_square(a)?;
    let n = a.len();
    if !is_strongly_connected(&support_lists(a)) {
        return Err(Error::NotTransitive);
    }
    let scale = max_entry(a);
    if scale == 0.0 {
        // the 1x1 zero matrix
        return Ok(Perron {
            log_value: f64::NEG_INFINITY,
            right: vec![1.0],
            left: vec![1.0],
            iterations: 0,
        });
    }
    let m: Vec<Vec<f64>> = a
        .iter()
        .map(|r| r.iter().map(|x| x / scale).collect())
        .collect();
    let rho = rough_spectral_radius(&m);
    let (right, it_r) = power_vector(&m, rho, false)?;
    let (mut left, it_l) = power_vector(&m, rho, true)?;
    // Σ(Mv) = λ Σv with Σv = 1; read it off the largest component instead
    // when that is more accurate.
    let imax = (0..n).fold(0, |b, i| if right[i] > right[b] { i } else { b });
    let lambda = compensated_sum((0..n).map(|j| m[imax][j] * right[j])) / right[imax];
    let dot = compensated_sum(left.iter().zip(&right).map(|(l, r)| l * r));
    for l in &mut left {
        *l /= dot;
    }
    Ok(Perron {
        log_value: scale.ln() + lambda.ln(),
        right,
        left,
        iterations: it_r.max(it_l),
    })
}

/// Log spectral radius of any nonnegative square matrix: the largest Perron
/// root over the irreducible diagonal blocks, `-inf` when nilpotent.
pub fn log_spectral_radius(a: &[Vec<f64>]) -> Result<f64> {
    check_square(a)?;
    let mut best = f64::NEG_INFINITY;
    for comp in component_lists(&support_lists(a)) {
        let block: Vec<Vec<f64>> = comp.iter().map(|&i| comp.iter().map(|&j| a[i][j]).collect()).collect();
        if block.len() == 1 && block[0][0] == 0.0 {
            continue;
        }
        best = best.max(perron(&block)?.log_value);
    }
    Ok(best)
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut guard = 0;
    while (hi - lo).abs() > tol && guard < 400 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        guard += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of a monotone function by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NonConvergence {
            what: "bisection bracket",
            iterations: 0,
        });
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::default();
    for x in it {
        s.add(x);
    }
    s.value()
}

/// Stationary vector of an irreducible row-stochastic matrix (direct solve).
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidInput("stationary vector is not unique".into()))?;
    let mut v: Vec<f64> = x.iter().map(|&t| if t < 0.0 && t > -1e-12 { 0.0 } else { t }).collect();
    if v.iter().any(|&t| t < 0.0 || !t.is_finite()) {
        return Err(Error::InvalidInput("stationary solve produced negative mass".into()));
    }
    let s: f64 = v.iter().sum();
    for t in &mut v {
        *t /= s;
    }
    Ok(v)
}

/// Strongly connected components (Kosaraju). Returns component id per vertex.
pub fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut pred = vec![Vec::new(); n];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (u, ref mut idx)) = stack.last_mut() {
            if *idx < succ[u].len() {
                let v = succ[u][*idx];
                *idx += 1;
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut next_id = 0;
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        let mut stack = vec![root];
        comp[root] = next_id;
        while let Some(u) = stack.pop() {
            for &v in &pred[u] {
                if comp[v] == usize::MAX {
                    comp[v] = next_id;
                    stack.push(v);
                }
            }
        }
        next_id += 1;
    }
    comp
}

/// Vertex lists of the strongly connected components.
pub fn component_lists(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let comp = strongly_connected_components(succ);
    let count = comp.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); count];
    for (v, &c) in comp.iter().enumerate() {
        out[c].push(v);
    }
    out
}

pub fn is_strongly_connected(succ: &[Vec<usize>]) -> bool {
    if succ.is_empty() {
        return false;
    }
    let comp = strongly_connected_components(succ);
    comp.iter().all(|&c| c == comp[0])
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period (gcd of cycle lengths) of a strongly connected digraph.
pub fn period(succ: &[Vec<usize>]) -> usize {
    let n = succ.len();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0;
    for (u, vs) in succ.iter().enumerate() {
        if level[u] == usize::MAX {
            continue;
        }
        for &v in vs {
            let d = (level[u] + 1) as i64 - level[v] as i64;
            g = gcd(g, d.unsigned_abs() as usize);
        }
    }
    g
}
