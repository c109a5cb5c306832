use crate::error::{Error, Result};
use crate::lattice::Grid;
use std::collections::HashMap;

/// Weights and vertices of a hull split. Vertices are always lattice nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub weights: Vec<f64>,
    pub nodes: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl SplitPlan {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Sum of weights times vertex values.
    pub fn value(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let d = self.points[0].len();
        (0..d)
            .map(|k| self.weights.iter().zip(&self.points).map(|(w, p)| w * p[k]).sum())
            .collect()
    }
}

/// Bound 2 d L on the lattice convexification error for an L-Lipschitz function.
pub fn vex_error_bound(spacing: f64, lipschitz: f64) -> f64 {
    debug_assert!(spacing > 0.0 && lipschitz >= 0.0);
    2.0 * spacing * lipschitz
}

fn touch_tol(samples: &[f64]) -> f64 {
    1e-9 * (1.0 + samples.iter().fold(0.0f64, |a, b| a.max(b.abs())))
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower convex envelope of samples on a strictly increasing 1-D lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull1d {
    xs: Vec<f64>,
    samples: Vec<f64>,
    vertices: Vec<usize>,
    values: Vec<f64>,
}

pub fn lower_hull_1d(xs: &[f64], samples: &[f64]) -> Result<Hull1d> {
    if xs.len() < 2 || xs.len() != samples.len() {
        return Err(Error::Hull("need at least two samples with matching coordinates".into()));
    }
    if xs.iter().chain(samples).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lower_hull_1d"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Hull("coordinates must be strictly increasing (duplicate or unsorted)".into()));
    }
    let mut vertices: Vec<usize> = Vec::with_capacity(xs.len());
    for j in 0..xs.len() {
        while vertices.len() >= 2 {
            let a = vertices[vertices.len() - 2];
            let b = vertices[vertices.len() - 1];
            let c = cross((xs[a], samples[a]), (xs[b], samples[b]), (xs[j], samples[j]));
            let scale = ((xs[j] - xs[a]).abs() * (1.0 + samples[a].abs().max(samples[j].abs()))).max(1e-300);
            if c <= 1e-12 * scale {
                vertices.pop();
            } else {
                break;
            }
        }
        vertices.push(j);
    }
    let mut values = samples.to_vec();
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (samples[b] - samples[a]) / (xs[b] - xs[a]);
        for j in a + 1..b {
            values[j] = (samples[a] + slope * (xs[j] - xs[a])).min(samples[j]);
        }
    }
    Ok(Hull1d { xs: xs.to_vec(), samples: samples.to_vec(), vertices, values })
}

impl Hull1d {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Envelope evaluated at every lattice node.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, x: f64) -> Result<()> {
        let (a, b) = (self.xs[0], *self.xs.last().unwrap());
        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if !x.is_finite() || x < a - tol || x > b + tol {
            return Err(Error::OutOfDomain(format!("{x} outside [{a}, {b}]")));
        }
        Ok(())
    }

    fn bracket(&self, x: f64) -> (usize, f64) {
        let n = self.xs.len();
        let j = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let (a, b) = (j - 1, j);
        let f = ((x - self.xs[a]) / (self.xs[b] - self.xs[a])).clamp(0.0, 1.0);
        (a, f)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let (a, f) = self.bracket(x);
        Ok(if f == 0.0 {
            self.values[a]
        } else {
            (1.0 - f) * self.values[a] + f * self.values[a + 1]
        })
    }

    /// Slope of the envelope at x; the midpoint of the subgradient interval at a kink.
    pub fn slope(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let n = self.xs.len();
        let seg = |a: usize| (self.values[a + 1] - self.values[a]) / (self.xs[a + 1] - self.xs[a]);
        let (a, f) = self.bracket(x);
        let scale = self.xs[n - 1] - self.xs[0];
        let at_node = if f * (self.xs[a + 1] - self.xs[a]) <= 1e-12 * scale {
            Some(a)
        } else if (1.0 - f) * (self.xs[a + 1] - self.xs[a]) <= 1e-12 * scale {
            Some(a + 1)
        } else {
            None
        };
        Ok(match at_node {
            None => seg(a),
            Some(0) => seg(0),
            Some(j) if j == n - 1 => seg(n - 2),
            Some(j) => 0.5 * (seg(j - 1) + seg(j)),
        })
    }

    /// Nodes where the samples touch the envelope.
    pub fn touching(&self) -> Vec<usize> {
        let tol = touch_tol(&self.samples);
        (0..self.xs.len()).filter(|&j| self.samples[j] - self.values[j] <= tol).collect()
    }

    /// Split `x` over the nearest touching nodes on each side; a touching
    /// node returns a single vertex.
    pub fn split_at(&self, x: f64) -> Result<SplitPlan> {
        self.check(x)?;
        let touch = self.touching();
        let scale = 1e-12 * (1.0 + self.xs[0].abs().max(self.xs[self.xs.len() - 1].abs()));
        if let Some(&j) = touch.iter().find(|&&j| (self.xs[j] - x).abs() <= scale) {
            return Ok(self.plan(vec![(j, 1.0)]));
        }
        let left = touch.iter().rev().find(|&&j| self.xs[j] < x).copied();
        let right = touch.iter().find(|&&j| self.xs[j] > x).copied();
        match (left, right) {
            (Some(a), Some(b)) => {
                let t = (x - self.xs[a]) / (self.xs[b] - self.xs[a]);
                Ok(self.plan(vec![(a, 1.0 - t), (b, t)]))
            }
            _ => Err(Error::Hull("envelope endpoints must touch the samples".into())),
        }
    }

    fn plan(&self, parts: Vec<(usize, f64)>) -> SplitPlan {
        SplitPlan {
            weights: parts.iter().map(|p| p.1).collect(),
            nodes: parts.iter().map(|p| p.0).collect(),
            points: parts.iter().map(|p| vec![self.xs[p.0]]).collect(),
            values: parts.iter().map(|p| self.values[p.0]).collect(),
        }
    }
}

/// A lower face of the lifted hull: z = coef[0] x + coef[1] y + coef[2].
#[derive(Debug, Clone, PartialEq)]
pub struct HullFace {
    pub vertices: [usize; 3],
    pub coef: [f64; 3],
}

impl HullFace {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.coef[0] * x + self.coef[1] * y + self.coef[2]
    }
}

/// Lower convex envelope of samples on a two-dimensional lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull2d {
    grid: Grid,
    samples: Vec<f64>,
    values: Vec<f64>,
    faces: Vec<HullFace>,
}

type Candidate = (f64, Vec<usize>, Vec<(usize, f64)>);

fn consider(best: &mut Option<Candidate>, slack: f64, cost: f64, parts: Vec<(usize, f64)>) {
    let mut key: Vec<usize> = parts.iter().map(|p| p.0).collect();
    key.sort_unstable();
    let better = match best {
        None => true,
        Some((c, k, _)) => cost < *c - slack || ((cost - *c).abs() <= slack && key < *k),
    };
    if better {
        *best = Some((cost, key, parts));
    }
}

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

struct Face3 {
    v: [usize; 3],
    n: P3,
    d: f64,
    alive: bool,
}

fn plane_through(pts: &[(f64, f64, f64)], v: [usize; 3]) -> Option<[f64; 3]> {
    let (x0, y0, z0) = pts[v[0]];
    let (x1, y1, z1) = pts[v[1]];
    let (x2, y2, z2) = pts[v[2]];
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    if det.abs() < 1e-300 {
        return None;
    }
    let a = ((z1 - z0) * (y2 - y0) - (z2 - z0) * (y1 - y0)) / det;
    let b = ((x1 - x0) * (z2 - z0) - (x2 - x0) * (z1 - z0)) / det;
    Some([a, b, z0 - a * x0 - b * y0])
}

fn edge_key(a: usize, b: usize) -> u64 {
    ((a as u64) << 32) | b as u64
}

/// Incremental 3-D hull of normalized points; returns lower faces as vertex triples.
fn lower_faces(pts: &[P3], init: [usize; 4], eps: f64) -> Vec<[usize; 3]> {
    let centroid = {
        let mut c = [0.0; 3];
        for &i in &init {
            for k in 0..3 {
                c[k] += pts[i][k] / 4.0;
            }
        }
        c
    };
    let mut faces: Vec<Face3> = Vec::new();
    let mut edges: HashMap<u64, usize> = HashMap::new();
    let make = |v: [usize; 3]| -> Face3 {
        let n = cross3(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
        let len = dot(n, n).sqrt();
        if len < 1e-300 {
            return Face3 { v, n: [0.0; 3], d: 0.0, alive: true };
        }
        let n = [n[0] / len, n[1] / len, n[2] / len];
        Face3 { v, n, d: dot(n, pts[v[0]]), alive: true }
    };
    let [a, b, c, d] = init;
    for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        let mut f = make(tri);
        if dot(f.n, centroid) - f.d > 0.0 {
            f = make([tri[0], tri[2], tri[1]]);
        }
        let id = faces.len();
        for k in 0..3 {
            edges.insert(edge_key(f.v[k], f.v[(k + 1) % 3]), id);
        }
        faces.push(f);
    }

    // deterministic shuffle of insertion order
    let mut order: Vec<usize> = (0..pts.len()).filter(|i| !init.contains(i)).collect();
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    for i in (1..order.len()).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        order.swap(i, (state % (i as u64 + 1)) as usize);
    }

    let mut visible = vec![false; 0];
    for &p in &order {
        let q = pts[p];
        let mut best = None;
        let mut best_d = eps;
        for (id, f) in faces.iter().enumerate() {
            if f.alive {
                let dist = dot(f.n, q) - f.d;
                if dist > best_d {
                    best_d = dist;
                    best = Some(id);
                }
            }
        }
        let Some(seed) = best else { continue };
        visible.resize(faces.len(), false);
        let mut stack = vec![seed];
        let mut vis_list = vec![seed];
        visible[seed] = true;
        while let Some(f) = stack.pop() {
            let v = faces[f].v;
            for k in 0..3 {
                if let Some(&g) = edges.get(&edge_key(v[(k + 1) % 3], v[k])) {
                    if !visible[g] && faces[g].alive && dot(faces[g].n, q) - faces[g].d > eps {
                        visible[g] = true;
                        stack.push(g);
                        vis_list.push(g);
                    }
                }
            }
        }
        let mut horizon = Vec::new();
        for &f in &vis_list {
            let v = faces[f].v;
            for k in 0..3 {
                let (x, y) = (v[k], v[(k + 1) % 3]);
                match edges.get(&edge_key(y, x)) {
                    Some(&g) if visible[g] => {}
                    _ => horizon.push((x, y)),
                }
            }
        }
        for &f in &vis_list {
            faces[f].alive = false;
            let v = faces[f].v;
            for k in 0..3 {
                let key = edge_key(v[k], v[(k + 1) % 3]);
                if edges.get(&key) == Some(&f) {
                    edges.remove(&key);
                }
            }
            visible[f] = false;
        }
        for (x, y) in horizon {
            let f = make([x, y, p]);
            let id = faces.len();
            for k in 0..3 {
                edges.insert(edge_key(f.v[k], f.v[(k + 1) % 3]), id);
            }
            faces.push(f);
        }
    }
    faces
        .into_iter()
        .filter(|f| f.alive && f.n[2] < -1e-9)
        .map(|f| f.v)
        .collect()
}

pub fn lower_hull_2d(grid: &Grid, samples: &[f64]) -> Result<Hull2d> {
    if grid.dim() != 2 {
        return Err(Error::Hull(format!("expected a 2-D lattice, got dimension {}", grid.dim())));
    }
    if samples.len() != grid.len() {
        return Err(Error::Hull(format!(
            "{} samples for a lattice with {} nodes",
            samples.len(),
            grid.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lower_hull_2d"));
    }
    let n = grid.len();
    let (nx, ny) = (grid.counts()[0], grid.counts()[1]);
    let orig: Vec<(f64, f64, f64)> = (0..n)
        .map(|j| {
            let c = grid.coords(j);
            (c[0], c[1], samples[j])
        })
        .collect();
    let zmin = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let zs = (zmax - zmin).max(1e-300);
    let (sx, sy) = (grid.hi()[0] - grid.lo()[0], grid.hi()[1] - grid.lo()[1]);
    let pts: Vec<P3> = orig
        .iter()
        .map(|&(x, y, z)| [(x - grid.lo()[0]) / sx, (y - grid.lo()[1]) / sy, (z - zmin) / zs])
        .collect();
    let eps = 1e-11;

    let i0 = 0;
    let i1 = grid.flat_index(&[nx - 1, 0]);
    let i2 = grid.flat_index(&[0, ny - 1]);
    let base = cross3(sub(pts[i1], pts[i0]), sub(pts[i2], pts[i0]));
    let blen = dot(base, base).sqrt();
    let bn = [base[0] / blen, base[1] / blen, base[2] / blen];
    let (mut i3, mut far) = (0, 0.0);
    for (j, p) in pts.iter().enumerate() {
        let dist = dot(bn, sub(*p, pts[i0])).abs();
        if dist > far {
            far = dist;
            i3 = j;
        }
    }

    let tris: Vec<[usize; 3]> = if far <= eps || zmax - zmin <= 1e-14 * (1.0 + zmax.abs()) {
        // affine data: triangulate the lattice cells
        let mut t = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
        for i in 0..nx - 1 {
            for j in 0..ny - 1 {
                let a = grid.flat_index(&[i, j]);
                let b = grid.flat_index(&[i + 1, j]);
                let c = grid.flat_index(&[i, j + 1]);
                let d = grid.flat_index(&[i + 1, j + 1]);
                t.push([a, b, d]);
                t.push([a, d, c]);
            }
        }
        t
    } else {
        lower_faces(&pts, [i0, i1, i2, i3], eps)
    };

    let mut faces: Vec<HullFace> = tris
        .into_iter()
        .filter_map(|v| {
            let coef = plane_through(&orig, v)?;
            let mut s = v;
            s.sort_unstable();
            Some(HullFace { vertices: s, coef })
        })
        .collect();
    faces.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    if faces.is_empty() {
        return Err(Error::Hull("no lower faces found".into()));
    }
    let values: Vec<f64> = (0..n)
        .map(|j| {
            let (x, y, z) = orig[j];
            let m = faces.iter().map(|f| f.eval(x, y)).fold(f64::NEG_INFINITY, f64::max);
            m.min(z)
        })
        .collect();
    Ok(Hull2d { grid: grid.clone(), samples: samples.to_vec(), values, faces })
}

impl Hull2d {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn faces(&self) -> &[HullFace] {
        &self.faces
    }

    fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() != 2 || q.iter().any(|v| !v.is_finite()) || !self.grid.contains(q) {
            return Err(Error::OutOfDomain(format!("{q:?} outside the hull domain")));
        }
        Ok(())
    }

    pub fn eval(&self, q: &[f64]) -> Result<f64> {
        self.check(q)?;
        let m = self.faces.iter().map(|f| f.eval(q[0], q[1])).fold(f64::NEG_INFINITY, f64::max);
        let j = self.grid.nearest(q);
        let c = self.grid.coords(j);
        if (c[0] - q[0]).abs() <= 1e-12 && (c[1] - q[1]).abs() <= 1e-12 {
            return Ok(self.values[j]);
        }
        Ok(m)
    }

    fn bary(&self, tri: [usize; 3], q: (f64, f64)) -> Option<[f64; 3]> {
        let p: Vec<(f64, f64)> = tri
            .iter()
            .map(|&j| {
                let c = self.grid.coords(j);
                (c[0], c[1])
            })
            .collect();
        let area = cross(p[0], p[1], p[2]);
        let scale = self.grid.max_spacing().powi(2);
        if area.abs() <= 1e-12 * scale {
            return None;
        }
        let l0 = cross(q, p[1], p[2]) / area;
        let l1 = cross(p[0], q, p[2]) / area;
        let l2 = 1.0 - l0 - l1;
        let t = -1e-10;
        if l0 >= t && l1 >= t && l2 >= t {
            Some([l0.max(0.0), l1.max(0.0), l2.max(0.0)])
        } else {
            None
        }
    }

    /// Split `q` over at most three touching nodes of the supporting plane,
    /// preferring the fewest and closest vertices; ties go to the
    /// lexicographically smallest vertex set.
    pub fn split_at(&self, q: &[f64]) -> Result<SplitPlan> {
        self.check(q)?;
        let tol = touch_tol(&self.samples);
        let qq = (q[0], q[1]);
        let j = self.grid.nearest(q);
        let cj = self.grid.coords(j);
        let on_node = (cj[0] - q[0]).abs() <= 1e-12 * (1.0 + q[0].abs())
            && (cj[1] - q[1]).abs() <= 1e-12 * (1.0 + q[1].abs());
        if on_node && self.samples[j] - self.values[j] <= tol {
            return Ok(self.plan(vec![(j, 1.0)]));
        }
        let support = self
            .faces
            .iter()
            .find(|f| self.bary(f.vertices, qq).is_some())
            .or_else(|| {
                self.faces
                    .iter()
                    .max_by(|a, b| a.eval(q[0], q[1]).total_cmp(&b.eval(q[0], q[1])))
            })
            .ok_or_else(|| Error::Hull("empty hull".into()))?;
        let coords: Vec<(f64, f64)> = (0..self.grid.len())
            .map(|i| {
                let c = self.grid.coords(i);
                (c[0], c[1])
            })
            .collect();
        let mut touch: Vec<(f64, usize)> = (0..self.grid.len())
            .filter(|&i| self.samples[i] - support.eval(coords[i].0, coords[i].1) <= tol)
            .map(|i| (((coords[i].0 - qq.0).powi(2) + (coords[i].1 - qq.1).powi(2)).sqrt(), i))
            .collect();
        touch.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        touch.truncate(40);
        let h = self.grid.max_spacing();

        if on_node {
            if let Some(&(d, i)) = touch.first() {
                if d <= 1e-12 * (1.0 + h) {
                    return Ok(self.plan(vec![(i, 1.0)]));
                }
            }
        }
        let mut best: Option<Candidate> = None;
        let slack = 1e-12 * (1.0 + h);
        for a in 0..touch.len() {
            for b in a + 1..touch.len() {
                let (ia, ib) = (touch[a].1, touch[b].1);
                let (pa, pb) = (coords[ia], coords[ib]);
                let len2 = (pb.0 - pa.0).powi(2) + (pb.1 - pa.1).powi(2);
                let cr = cross(pa, pb, qq);
                if cr.abs() > 1e-10 * len2.sqrt() * (1.0 + h) {
                    continue;
                }
                let t = ((qq.0 - pa.0) * (pb.0 - pa.0) + (qq.1 - pa.1) * (pb.1 - pa.1)) / len2;
                if (-1e-12..=1.0 + 1e-12).contains(&t) {
                    let t = t.clamp(0.0, 1.0);
                    consider(&mut best, slack, touch[a].0 + touch[b].0, vec![(ia, 1.0 - t), (ib, t)]);
                }
            }
        }
        if best.is_none() {
            for a in 0..touch.len() {
                for b in a + 1..touch.len() {
                    for c in b + 1..touch.len() {
                        let tri = [touch[a].1, touch[b].1, touch[c].1];
                        if let Some(l) = self.bary(tri, qq) {
                            consider(
                                &mut best,
                                slack,
                                touch[a].0 + touch[b].0 + touch[c].0,
                                vec![(tri[0], l[0]), (tri[1], l[1]), (tri[2], l[2])],
                            );
                        }
                    }
                }
            }
        }
        let parts = match best {
            Some((_, _, p)) => p,
            None => {
                let v = support.vertices;
                let l = self.bary(v, qq).unwrap_or([1.0 / 3.0; 3]);
                vec![(v[0], l[0]), (v[1], l[1]), (v[2], l[2])]
            }
        };
        let parts: Vec<(usize, f64)> = parts.into_iter().filter(|p| p.1 > 1e-14).collect();
        let s: f64 = parts.iter().map(|p| p.1).sum();
        Ok(self.plan(parts.into_iter().map(|(i, w)| (i, w / s)).collect()))
    }

    fn plan(&self, parts: Vec<(usize, f64)>) -> SplitPlan {
        SplitPlan {
            weights: parts.iter().map(|p| p.1).collect(),
            nodes: parts.iter().map(|p| p.0).collect(),
            points: parts.iter().map(|p| self.grid.coords(p.0)).collect(),
            values: parts.iter().map(|p| self.values[p.0]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn tent_flattens() {
        let h = lower_hull_1d(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(h.vertices(), &[0, 2]);
        assert_eq!(h.eval(0.5).unwrap(), 0.0);
    }

    #[test]
    fn convex_input_is_fixed() {
        let xs = lin(21);
        let ys: Vec<f64> = xs.iter().map(|x| (x - 0.3) * (x - 0.3)).collect();
        let h = lower_hull_1d(&xs, &ys).unwrap();
        for j in 0..xs.len() {
            assert!((h.values()[j] - ys[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicate_coordinates_rejected() {
        assert!(lower_hull_1d(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(lower_hull_1d(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn split_1d_segment_and_vertex() {
        // max-convention stage of the quiche game negated: hull vertices 0 and 2/3
        let xs = lin(61);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&p| {
                let b = if 3.0 * p - 2.0 >= 0.0 { p } else { 4.0 * p - 2.0 };
                let q = if 4.0 * p - 3.0 >= 0.0 { 2.0 - 2.0 * p } else { 2.0 * p - 1.0 };
                -b.max(q)
            })
            .collect();
        let h = lower_hull_1d(&xs, &ys).unwrap();
        let s = h.split_at(1.0 / 3.0).unwrap();
        assert_eq!(s.nodes, vec![0, 40]);
        assert!((s.weights[0] - 0.5).abs() < 1e-12);
        assert!((h.eval(1.0 / 3.0).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((s.value() - 1.0 / 6.0).abs() < 1e-12);
        let v = h.split_at(0.8).unwrap();
        assert_eq!(v.len(), 1);
        assert!((h.slope(1.0 / 3.0).unwrap() + 2.5).abs() < 1e-12);
    }

    #[test]
    fn bound_formula() {
        assert!((vex_error_bound(0.01, 10.0) - 0.2).abs() < 1e-15);
        assert_eq!(vex_error_bound(0.3, 0.0), 0.0);
        assert!((vex_error_bound(0.005, 10.0) - 0.1).abs() < 1e-15);
    }

    fn grid_samples(n: usize, f: impl Fn(f64, f64) -> f64) -> (Grid, Vec<f64>) {
        let g = Grid::uniform(2, -1.0, 1.0, n).unwrap();
        let s = (0..g.len())
            .map(|j| {
                let c = g.coords(j);
                f(c[0], c[1])
            })
            .collect();
        (g, s)
    }

    #[test]
    fn plane_is_its_own_hull() {
        let (g, s) = grid_samples(7, |x, y| 0.3 * x - 1.2 * y + 0.7);
        let h = lower_hull_2d(&g, &s).unwrap();
        for j in 0..g.len() {
            assert!((h.values()[j] - s[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn bowl_is_its_own_hull() {
        let (g, s) = grid_samples(9, |x, y| x * x + y * y);
        let h = lower_hull_2d(&g, &s).unwrap();
        for j in 0..g.len() {
            assert!((h.values()[j] - s[j]).abs() < 1e-12, "node {j}");
        }
    }

    #[test]
    fn saddle_center_drops_to_minus_one() {
        let (g, s) = grid_samples(3, |x, y| -x * y);
        let h = lower_hull_2d(&g, &s).unwrap();
        assert!((h.values()[4] + 1.0).abs() < 1e-12);
        let plan = h.split_at(&[0.0, 0.0]).unwrap();
        assert_eq!(plan.len(), 2);
        assert!((plan.value() + 1.0).abs() < 1e-12);
        let c = plan.barycenter();
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
    }

    /// Envelope by enumeration of all node triangles containing the query.
    fn brute_envelope(g: &Grid, s: &[f64], j: usize) -> f64 {
        let q = g.coords(j);
        let n = g.len();
        let mut best = s[j];
        let pts: Vec<Vec<f64>> = (0..n).map(|i| g.coords(i)).collect();
        for a in 0..n {
            for b in a + 1..n {
                // segment
                let d = [pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]];
                let cr = d[0] * (q[1] - pts[a][1]) - d[1] * (q[0] - pts[a][0]);
                if cr.abs() < 1e-12 {
                    let t = ((q[0] - pts[a][0]) * d[0] + (q[1] - pts[a][1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]);
                    if (0.0..=1.0).contains(&t) {
                        best = best.min((1.0 - t) * s[a] + t * s[b]);
                    }
                }
                for c in b + 1..n {
                    let p = |i: usize| (pts[i][0], pts[i][1]);
                    let area = cross(p(a), p(b), p(c));
                    if area.abs() < 1e-12 {
                        continue;
                    }
                    let qq = (q[0], q[1]);
                    let l0 = cross(qq, p(b), p(c)) / area;
                    let l1 = cross(p(a), qq, p(c)) / area;
                    let l2 = 1.0 - l0 - l1;
                    if l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12 {
                        best = best.min(l0 * s[a] + l1 * s[b] + l2 * s[c]);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn matches_enumeration_on_small_grids() {
        let fs: Vec<Box<dyn Fn(f64, f64) -> f64>> = vec![
            Box::new(|x, y| (3.0 * x).sin() + (2.0 * y).cos()),
            Box::new(|x, y| -(x * x) + 0.5 * y * y),
            Box::new(|x, y| (x - y).abs().min(0.4) - 0.2 * x),
            Box::new(|x, y| ((x * 7.0).round() * 0.1 + y * y * (x + 2.0)).max(-x)),
        ];
        for f in &fs {
            let (g, s) = grid_samples(5, f);
            let h = lower_hull_2d(&g, &s).unwrap();
            for j in 0..g.len() {
                let b = brute_envelope(&g, &s, j);
                assert!((h.values()[j] - b).abs() < 1e-9, "node {j}: {} vs {b}", h.values()[j]);
            }
        }
    }
}
