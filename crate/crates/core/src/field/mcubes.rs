//! Marching cubes with the asymptotic decider on ambiguous faces.
//!
//! Each cube is classified by the 8-bit pattern of corners above the level.
//! Instead of a lookup table of triangulations, the iso-line segments on the
//! six faces are built directly and chained into closed polygons. A face with
//! four crossings is resolved by the value of the bilinear interpolant at its
//! saddle point, so neighboring cubes always agree on the shared face and the
//! surface closes up wherever it stays inside the box.
//!
//! Polygons are fanned from a corner whose diagonals avoid the cube faces, or
//! else from an extra vertex on the trilinear level set inside the cube.
//! Crossings within `SNAP` of a grid node are moved onto the node; triangles
//! that collapse as a result are dropped.
//!
//! Vertices are keyed by grid edge, which welds them across cubes. Slabs of
//! cubes are processed in parallel and merged in slab order.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{IsoMesh, ScalarField3D};

/// Corner `c` sits at offset `(c & 1, c >> 1 & 1, c >> 2 & 1)`.
const fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, c >> 1 & 1, c >> 2 & 1]
}

/// Local id of the edge between two corners differing in one bit.
#[inline]
fn edge_between(a: usize, b: usize) -> usize {
    let axis = (a ^ b).trailing_zeros() as usize;
    a.min(b) * 3 + axis
}

/// The six faces, corners in a canonical cyclic order: for the two free axes
/// `p < q`, `(0,0) (1,0) (1,1) (0,1)`. Both cubes sharing a face list it the
/// same way, so they evaluate the decider identically.
const FACES: [[usize; 4]; 6] = faces();

const fn faces() -> [[usize; 4]; 6] {
    let mut out = [[0; 4]; 6];
    let mut f = 0;
    let mut axis = 0;
    while axis < 3 {
        let (p, q) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut side = 0;
        while side < 2 {
            let base = side << axis;
            out[f] = [base, base | 1 << p, base | 1 << p | 1 << q, base | 1 << q];
            f += 1;
            side += 1;
        }
        axis += 1;
    }
    out
}

/// Whether each face's corner order runs counter-clockwise seen from
/// outside the cube: the order is counter-clockwise about `+axis` for axes
/// 0 and 2 and clockwise for axis 1, and the outward normal of side 0 is
/// `-axis`.
const FACE_CCW: [bool; 6] = [false, true, true, false, false, true];

struct Slab {
    /// `(global edge id, position, normal)` in first-use order.
    vertices: Vec<(u64, [f64; 3], [f64; 3])>,
    triangles: Vec<[u64; 3]>,
}

/// Iso-surface of `field` at `level`; the empty mesh if the level is not
/// crossed. Normals point towards decreasing field values.
pub fn marching_cubes(field: &ScalarField3D, level: f64) -> IsoMesh {
    let [n1, n2, n3] = field.grid.n;
    if !(field.max() > level) {
        return IsoMesh::empty(level);
    }
    let slabs: Vec<Slab> = (0..n3 - 1)
        .into_par_iter()
        .map(|k| {
            let mut slab = Slab {
                vertices: Vec::new(),
                triangles: Vec::new(),
            };
            let mut seen: HashMap<u64, usize> = HashMap::new();
            for j in 0..n2 - 1 {
                for i in 0..n1 - 1 {
                    cube(field, level, [i, j, k], &mut slab, &mut seen);
                }
            }
            slab
        })
        .collect();

    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut mesh = IsoMesh::empty(level);
    for slab in slabs {
        for (id, p, n) in slab.vertices {
            index.entry(id).or_insert_with(|| {
                mesh.vertices.push(p);
                mesh.normals.push(n);
                (mesh.vertices.len() - 1) as u32
            });
        }
        for t in slab.triangles {
            mesh.triangles.push(t.map(|id| index[&id]));
        }
    }
    mesh.fill_missing_normals();
    mesh
}

fn cube(field: &ScalarField3D, level: f64, at: [usize; 3], slab: &mut Slab, seen: &mut HashMap<u64, usize>) {
    let node = |c: usize| {
        let o = corner_offset(c);
        [at[0] + o[0], at[1] + o[1], at[2] + o[2]]
    };
    let mut v = [0.0; 8];
    let mut case = 0u8;
    for (c, val) in v.iter_mut().enumerate() {
        let [i, j, k] = node(c);
        *val = field.at(i, j, k);
        if *val > level {
            case |= 1 << c;
        }
    }
    if case == 0 || case == 0xff {
        return;
    }
    let inside = |c: usize| case >> c & 1 == 1;

    // Directed face segments, chained into rings. Seen from outside the
    // cube, every segment keeps the inside corners on its right; the cube
    // on the other side of a face then runs the same segment backwards,
    // which makes the windings of neighboring cubes agree.
    let mut next = [usize::MAX; 24];
    for (fi, f) in FACES.iter().enumerate() {
        let edges = [0, 1, 2, 3].map(|m| edge_between(f[m], f[(m + 1) % 4]));
        let leaving = |m: usize| inside(f[m]) && !inside(f[(m + 1) % 4]);
        let crossing: Vec<usize> = (0..4).filter(|&m| inside(f[m]) != inside(f[(m + 1) % 4])).collect();
        let mut segs: Vec<(usize, usize)> = Vec::with_capacity(2);
        match crossing.len() {
            2 => {
                let (a, b) = (crossing[0], crossing[1]);
                segs.push(if leaving(a) { (a, b) } else { (b, a) });
            }
            4 => {
                let [a, b, c, d] = f.map(|x| v[x]);
                let saddle = (a * c - b * d) / (a + c - b - d);
                // cut off the corners that the saddle value separates
                let cut_inside = !(saddle > level);
                for m in 0..4 {
                    if inside(f[m]) == cut_inside {
                        let before = (m + 3) % 4;
                        // (edge leaving the inside, edge entering it)
                        segs.push(if cut_inside { (m, before) } else { (before, m) });
                    }
                }
            }
            _ => {}
        }
        let ccw = FACE_CCW[fi];
        for (from, to) in segs {
            let (x, y) = (edges[from], edges[to]);
            if ccw {
                next[y] = x;
            } else {
                next[x] = y;
            }
        }
    }

    let mut done = [false; 24];
    let mut rings = 0u64;
    for start in 0..24 {
        if next[start] == usize::MAX || done[start] {
            continue;
        }
        let mut ring = vec![start];
        done[start] = true;
        let mut cur = next[start];
        while cur != start {
            ring.push(cur);
            done[cur] = true;
            cur = next[cur];
        }
        let verts: Vec<Vertex> = ring.iter().map(|&e| edge_vertex(field, level, at, e)).collect();
        let tris: Vec<[Vertex; 3]> = match fan_apex(&ring) {
            Some(a) => (1..ring.len() - 1)
                .map(|w| [verts[a], verts[(a + w) % ring.len()], verts[(a + w + 1) % ring.len()]])
                .collect(),
            None => {
                let id = 4 * field.grid.len() as u64 + 4 * field.grid.index(at[0], at[1], at[2]) as u64 + rings;
                let c = center_vertex(field, level, at, &v, &verts, id);
                (0..ring.len()).map(|w| [c, verts[w], verts[(w + 1) % ring.len()]]).collect()
            }
        };
        rings += 1;
        for tri in tris {
            let n = cross(sub(tri[1].1, tri[0].1), sub(tri[2].1, tri[0].1));
            if norm(n) == 0.0 || tri[0].0 == tri[1].0 || tri[1].0 == tri[2].0 || tri[0].0 == tri[2].0 {
                continue;
            }
            for t in &tri {
                seen.entry(t.0).or_insert_with(|| {
                    slab.vertices.push(*t);
                    slab.vertices.len() - 1
                });
            }
            slab.triangles.push(tri.map(|t| t.0));
        }
    }
}

type Vertex = (u64, [f64; 3], [f64; 3]);

/// Whether two cube edges lie on a common face.
fn share_face(e1: usize, e2: usize) -> bool {
    let faces = |e: usize| {
        let (c, axis) = (e / 3, e % 3);
        (0..3).filter(move |&b| b != axis).map(move |b| (b, c >> b & 1))
    };
    faces(e1).any(|f| faces(e2).any(|g| f == g))
}

/// A ring position whose fan diagonals all cross the cube's interior. A
/// diagonal lying in a face could coincide with one from the neighboring
/// cube and make the surface non-manifold.
fn fan_apex(ring: &[usize]) -> Option<usize> {
    let n = ring.len();
    if n == 3 {
        return Some(0);
    }
    (0..n).find(|&a| (2..n - 1).all(|w| !share_face(ring[a], ring[(a + w) % n])))
}

/// A vertex on the trilinear level set inside the cube, found by Newton
/// steps from the ring's centroid.
fn center_vertex(field: &ScalarField3D, level: f64, at: [usize; 3], v: &[f64; 8], ring: &[Vertex], id: u64) -> Vertex {
    let h = field.grid.spacing();
    let origin = field.grid.point(at[0], at[1], at[2]);
    let mut s = [0, 1, 2].map(|a| ring.iter().map(|r| (r.1[a] - origin[a]) / h[a]).sum::<f64>() / ring.len() as f64);
    let eval = |s: [f64; 3]| -> (f64, [f64; 3]) {
        let (mut f, mut g) = (0.0, [0.0; 3]);
        for (c, &val) in v.iter().enumerate() {
            let o = corner_offset(c);
            let w = [0, 1, 2].map(|a| if o[a] == 1 { s[a] } else { 1.0 - s[a] });
            f += val * w[0] * w[1] * w[2];
            for a in 0..3 {
                let dw = if o[a] == 1 { 1.0 } else { -1.0 };
                let rest: f64 = (0..3).filter(|&b| b != a).map(|b| w[b]).product();
                g[a] += val * dw * rest;
            }
        }
        (f, g)
    };
    for _ in 0..50 {
        let (f, g) = eval(s);
        let r = f - level;
        let gg = dot(g, g);
        if r.abs() <= 1e-14 * level.abs().max(1.0) || gg == 0.0 {
            break;
        }
        s = [0, 1, 2].map(|a| (s[a] - r * g[a] / gg).clamp(0.0, 1.0));
    }
    let (f, _) = eval(s);
    if (f - level).abs() > 1e-14 * level.abs().max(1.0) {
        // Newton stalled: bisect towards the nearest corner across the level
        let above = f > level;
        let corner = (0..8)
            .filter(|&c| (v[c] > level) != above)
            .map(|c| corner_offset(c).map(|x| x as f64))
            .min_by(|a, b| dist2(*a, s).total_cmp(&dist2(*b, s)))
            .expect("cube crosses the level");
        let (mut lo, mut hi) = (0.0, 1.0);
        let at_t = |t: f64| [0, 1, 2].map(|a| s[a] + t * (corner[a] - s[a]));
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (eval(at_t(mid)).0 > level) == above {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        s = at_t(0.5 * (lo + hi));
    }
    let (_, g) = eval(s);
    let p = [0, 1, 2].map(|a| origin[a] + s[a] * h[a]);
    let gw = [0, 1, 2].map(|a| -g[a] / h[a]);
    let len = norm(gw);
    let n = if len > 0.0 { gw.map(|x| x / len) } else { [0.0; 3] };
    (id, p, n)
}

/// Crossings this close to a node (as a fraction of the edge) are moved
/// onto it, so that the triangles they would make collapse cleanly.
const SNAP: f64 = 1e-9;

/// Global id, position and normal of the crossing on local edge `e`.
///
/// Ids: `3 * node + axis` for edge crossings, `3 * len + node` for crossings
/// snapped to a node, and from `4 * len` on for ring centers.
fn edge_vertex(field: &ScalarField3D, level: f64, at: [usize; 3], e: usize) -> Vertex {
    let (c, axis) = (e / 3, e % 3);
    let o = corner_offset(c);
    let a = [at[0] + o[0], at[1] + o[1], at[2] + o[2]];
    let mut b = a;
    b[axis] += 1;
    let (va, vb) = (field.at(a[0], a[1], a[2]), field.at(b[0], b[1], b[2]));
    let t = (level - va) / (vb - va);
    let unit = |g: [f64; 3]| {
        let len = norm(g);
        if len > 0.0 {
            g.map(|x| -x / len)
        } else {
            [0.0; 3]
        }
    };
    let len = field.grid.len() as u64;
    if t < SNAP || t > 1.0 - SNAP {
        let n = if t < SNAP { a } else { b };
        let id = 3 * len + field.grid.index(n[0], n[1], n[2]) as u64;
        return (id, field.grid.point(n[0], n[1], n[2]), unit(field.gradient(n[0], n[1], n[2])));
    }
    let (pa, pb) = (field.grid.point(a[0], a[1], a[2]), field.grid.point(b[0], b[1], b[2]));
    let p = [0, 1, 2].map(|m| pa[m] + t * (pb[m] - pa[m]));
    let (ga, gb) = (field.gradient(a[0], a[1], a[2]), field.gradient(b[0], b[1], b[2]));
    let g = [0, 1, 2].map(|m| ga[m] + t * (gb[m] - ga[m]));
    let id = (field.grid.index(a[0], a[1], a[2]) * 3 + axis) as u64;
    (id, p, unit(g))
}

#[inline]
pub(super) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

#[inline]
pub(super) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(super) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(super) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}
