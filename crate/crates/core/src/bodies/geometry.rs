//! Exact polytope kernel for dimensions 1 to 4.
//!
//! Hulls are found by brute force over supporting hyperplanes through
//! `d`-subsets, which is adequate for the few dozen vertices this crate
//! handles and is robust to coplanar points.

use std::collections::HashSet;

pub type Pt = Vec<f64>;

/// Closed halfspace `<normal, x> <= offset` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Pt,
    pub offset: f64,
}

impl Halfspace {
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Pt {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn axpy(a: f64, x: &[f64], y: &[f64]) -> Pt {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: &[f64]) -> Option<Pt> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| a.iter().map(|x| x / n).collect())
}

pub fn mean(points: &[Pt]) -> Pt {
    let d = points[0].len();
    let mut m = vec![0.0; d];
    for p in points {
        for (mi, pi) in m.iter_mut().zip(p) {
            *mi += pi;
        }
    }
    let k = points.len() as f64;
    m.iter_mut().for_each(|v| *v /= k);
    m
}

/// Determinant by partial-pivot elimination.
pub fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

/// Solves `a x = b`; `None` when `a` is numerically singular.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Pt> {
    let n = a.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[piv][c].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(piv, c);
        b.swap(piv, c);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Vector orthogonal to the `d - 1` rows of `rows` (generalized cross product).
fn cross(rows: &[Pt]) -> Pt {
    let d = rows.len() + 1;
    (0..d)
        .map(|i| {
            let minor: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| (0..d).filter(|&k| k != i).map(|k| r[k]).collect())
                .collect();
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * if minor.is_empty() { 1.0 } else { det(minor) }
        })
        .collect()
}

/// Orthonormal basis of the complement of `u` (which need not be unit).
pub fn complement_basis(u: &[f64]) -> Vec<Pt> {
    let d = u.len();
    let u = normalized(u).expect("nonzero direction");
    let mut basis: Vec<Pt> = vec![u];
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        for b in &basis {
            let c = dot(&e, b);
            e = axpy(-c, b, &e);
        }
        if let Some(v) = normalized(&e) {
            if norm(&e) > 1e-6 {
                basis.push(v);
            }
        }
        if basis.len() == d {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Largest distance from the centroid, used to scale tolerances.
pub fn spread(points: &[Pt]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let c = mean(points);
    points.iter().map(|p| norm(&sub(p, &c))).fold(0.0, f64::max)
}

/// Dimension of the affine hull.
pub fn affine_dim(points: &[Pt], tol: f64) -> usize {
    if points.is_empty() {
        return 0;
    }
    let mut basis: Vec<Pt> = Vec::new();
    let o = &points[0];
    for p in &points[1..] {
        let mut v = sub(p, o);
        for b in &basis {
            let c = dot(&v, b);
            v = axpy(-c, b, &v);
        }
        if norm(&v) > tol {
            basis.push(normalized(&v).unwrap());
        }
    }
    basis.len()
}

fn dedup(points: &[Pt], tol: f64) -> Vec<Pt> {
    let mut out: Vec<Pt> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| norm(&sub(p, q)) <= tol) {
            out.push(p.clone());
        }
    }
    out
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Facets of the hull of a full-dimensional point set (`d >= 2`), each with
/// the indices of the points lying on it.
pub fn facets(points: &[Pt], tol: f64) -> Vec<(Halfspace, Vec<usize>)> {
    let d = points[0].len();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    for_each_subset(points.len(), d, |idx| {
        let rows: Vec<Pt> = idx[1..].iter().map(|&i| sub(&points[i], &points[idx[0]])).collect();
        let raw = cross(&rows);
        let size: f64 = rows.iter().map(|r| norm(r)).product();
        if norm(&raw) <= 1e-12 * size {
            return;
        }
        let n = normalized(&raw).unwrap();
        let off = dot(&n, &points[idx[0]]);
        let (mut above, mut below) = (false, false);
        let mut members = Vec::new();
        for (j, p) in points.iter().enumerate() {
            let s = dot(&n, p) - off;
            if s > tol {
                above = true;
            } else if s < -tol {
                below = true;
            } else {
                members.push(j);
            }
            if above && below {
                return;
            }
        }
        if members.len() < d || affine_dim(&members.iter().map(|&j| points[j].clone()).collect::<Vec<_>>(), tol) < d - 1 {
            return;
        }
        if !seen.insert(members.clone()) {
            return;
        }
        let (normal, offset) = if above { (n.iter().map(|v| -v).collect(), -off) } else { (n, off) };
        out.push((Halfspace { normal, offset }, members));
    });
    out
}

/// Counter-clockwise hull of planar points with collinear points dropped.
pub fn hull_2d(points: &[Pt], tol: f64) -> Vec<Pt> {
    let mut p: Vec<Pt> = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let p = dedup(&p, tol);
    if p.len() < 3 {
        return p;
    }
    let turn = |o: &Pt, a: &Pt, b: &Pt| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let area_tol = tol * spread(&p).max(tol);
    let mut hull: Vec<Pt> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Pt>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for q in iter {
            while hull.len() >= start + 2 && turn(&hull[hull.len() - 2], &hull[hull.len() - 1], q) <= area_tol {
                hull.pop();
            }
            hull.push(q.clone());
        }
        hull.pop();
    }
    hull
}

/// Simplex decomposition of the hull of `points`; empty when the hull is
/// not full-dimensional.
pub fn triangulate(points: &[Pt], tol: f64) -> Vec<Vec<Pt>> {
    if points.is_empty() {
        return Vec::new();
    }
    let d = points[0].len();
    match d {
        0 => Vec::new(),
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > tol {
                vec![vec![vec![lo], vec![hi]]]
            } else {
                Vec::new()
            }
        }
        2 => {
            let h = hull_2d(points, tol);
            if h.len() < 3 {
                return Vec::new();
            }
            (1..h.len() - 1).map(|i| vec![h[0].clone(), h[i].clone(), h[i + 1].clone()]).collect()
        }
        _ => {
            let pts = dedup(points, tol);
            if pts.len() <= d || affine_dim(&pts, tol) < d {
                return Vec::new();
            }
            let inner = mean(&pts);
            let mut out = Vec::new();
            for (h, members) in facets(&pts, tol) {
                let basis = complement_basis(&h.normal);
                let origin = &pts[members[0]];
                let local: Vec<Pt> = members
                    .iter()
                    .map(|&j| {
                        let v = sub(&pts[j], origin);
                        basis.iter().map(|b| dot(&v, b)).collect()
                    })
                    .collect();
                for simplex in triangulate(&local, tol) {
                    let mut s: Vec<Pt> = simplex
                        .iter()
                        .map(|y| {
                            let mut x = origin.clone();
                            for (yk, b) in y.iter().zip(&basis) {
                                x = axpy(*yk, b, &x);
                            }
                            x
                        })
                        .collect();
                    s.push(inner.clone());
                    out.push(s);
                }
            }
            out
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn simplex_volume(s: &[Pt]) -> f64 {
    let d = s.len() - 1;
    let m: Vec<Vec<f64>> = s[1..].iter().map(|p| sub(p, &s[0])).collect();
    det(m).abs() / factorial(d)
}

/// Volume and centroid of a union of simplices with disjoint interiors.
pub fn volume_centroid(simplices: &[Vec<Pt>], d: usize) -> (f64, Pt) {
    let mut vol = 0.0;
    let mut c = vec![0.0; d];
    for s in simplices {
        let v = simplex_volume(s);
        let g = mean(s);
        vol += v;
        for (ci, gi) in c.iter_mut().zip(&g) {
            *ci += v * gi;
        }
    }
    if vol > 0.0 {
        c.iter_mut().for_each(|x| *x /= vol);
    }
    (vol, c)
}

/// Points whose hull is `S ∩ {<u,x> <= c}` for a simplex `S`.
///
/// For a simplex every vertex pair is an edge, so the crossings are exactly
/// the new vertices.
pub fn clip_simplex(s: &[Pt], u: &[f64], c: f64) -> Vec<Pt> {
    let h: Vec<f64> = s.iter().map(|p| dot(u, p) - c).collect();
    let mut out: Vec<Pt> = s.iter().zip(&h).filter(|(_, &hi)| hi <= 0.0).map(|(p, _)| p.clone()).collect();
    for i in 0..s.len() {
        for j in 0..s.len() {
            if h[i] < 0.0 && h[j] > 0.0 {
                let w = h[i] / (h[i] - h[j]);
                out.push(axpy(w, &sub(&s[j], &s[i]), &s[i]));
            }
        }
    }
    out
}

/// Points whose hull is `S ∩ {<u,x> = t}`.
pub fn slice_simplex(s: &[Pt], u: &[f64], t: f64) -> Vec<Pt> {
    let h: Vec<f64> = s.iter().map(|p| dot(u, p) - t).collect();
    let mut out: Vec<Pt> = s.iter().zip(&h).filter(|(_, &hi)| hi == 0.0).map(|(p, _)| p.clone()).collect();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if h[i] * h[j] < 0.0 {
                let w = h[i] / (h[i] - h[j]);
                out.push(axpy(w, &sub(&s[j], &s[i]), &s[i]));
            }
        }
    }
    out
}

/// `(d-1)`-volume of a point set lying in a hyperplane with unit normal `u`.
pub fn hyperplane_volume(points: &[Pt], u: &[f64], tol: f64) -> f64 {
    if points.len() < points.first().map_or(1, |p| p.len()) {
        return 0.0;
    }
    let basis = complement_basis(u);
    let local: Vec<Pt> = points.iter().map(|p| basis.iter().map(|b| dot(p, b)).collect()).collect();
    let simplices = triangulate(&local, tol);
    simplices.iter().map(|s| simplex_volume(s)).sum()
}

/// Vertices of a bounded H-polytope by brute-force `d`-subset intersection.
pub fn vertices_of(hs: &[Halfspace], d: usize, tol: f64) -> Vec<Pt> {
    let mut out: Vec<Pt> = Vec::new();
    for_each_subset(hs.len(), d, |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| hs[i].normal.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| hs[i].offset).collect();
        if let Some(x) = solve(a, b) {
            if hs.iter().all(|h| h.slack(&x) >= -tol) && !out.iter().any(|q| norm(&sub(&x, q)) <= tol) {
                out.push(x);
            }
        }
    });
    out
}
