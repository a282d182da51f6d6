//! Triangle meshes and their OBJ / JSON forms.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::mcubes::{cross, dot, norm, sub};
use super::GridSpec;
use crate::error::{Error, Result};
use crate::vine3d::VineSpec3D;

/// A triangulated level surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoMesh {
    pub level: f64,
    pub vertices: Vec<[f64; 3]>,
    /// Unit vectors, one per vertex, pointing towards lower field values.
    pub normals: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMesh {
    pub level: f64,
    pub mesh: IsoMesh,
}

/// Meshes of one field at several levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub grid: GridSpec,
    pub field_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<VineSpec3D>,
    pub levels: Vec<LevelMesh>,
}

impl IsoMesh {
    pub fn empty(level: f64) -> Self {
        IsoMesh {
            level,
            vertices: Vec::new(),
            normals: Vec::new(),
            triangles: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Unit normal of triangle `t` from its winding.
    pub fn face_normal(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i as usize]);
        let n = cross(sub(b, a), sub(c, a));
        let l = norm(n);
        n.map(|x| x / l)
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i as usize]);
                0.5 * norm(cross(sub(b, a), sub(c, a)))
            })
            .sum()
    }

    /// Number of edge-connected pieces.
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.triangles {
            let r0 = find(&mut parent, t[0] as usize);
            for &v in &t[1..] {
                let r = find(&mut parent, v as usize);
                parent[r] = r0;
            }
        }
        let mut roots: Vec<usize> = self
            .triangles
            .iter()
            .map(|t| find(&mut parent, t[0] as usize))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Undirected edges used by exactly one triangle.
    pub fn boundary_edges(&self) -> usize {
        let mut count: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &self.triangles {
            for m in 0..3 {
                let (a, b) = (t[m], t[(m + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.values().filter(|&&c| c == 1).count()
    }

    /// Whether neighboring triangles traverse every shared edge in opposite
    /// directions.
    pub fn consistently_oriented(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.triangles
            .iter()
            .all(|t| (0..3).all(|m| seen.insert((t[m], t[(m + 1) % 3]))))
    }

    /// Replaces zero normals by the mean normal of the adjacent faces.
    pub(crate) fn fill_missing_normals(&mut self) {
        let missing: Vec<bool> = self.normals.iter().map(|n| norm(*n) == 0.0).collect();
        if !missing.iter().any(|&m| m) {
            return;
        }
        let mut acc = vec![[0.0; 3]; self.vertices.len()];
        for t in 0..self.triangles.len() {
            let n = self.face_normal(t);
            for &v in &self.triangles[t] {
                let a = &mut acc[v as usize];
                for m in 0..3 {
                    a[m] += n[m];
                }
            }
        }
        for (v, a) in acc.into_iter().enumerate() {
            if missing[v] {
                let l = norm(a);
                self.normals[v] = if l > 0.0 { a.map(|x| x / l) } else { [0.0, 0.0, 1.0] };
            }
        }
    }

    /// Coordinates and normals rounded to single precision.
    pub fn quantized(&self) -> IsoMesh {
        let q = |p: &[f64; 3]| p.map(|x| x as f32 as f64);
        IsoMesh {
            level: self.level,
            vertices: self.vertices.iter().map(q).collect(),
            normals: self.normals.iter().map(q).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Whether normals agree with triangle windings on average.
    pub fn normals_agree_with_winding(&self) -> bool {
        (0..self.triangles.len()).all(|t| {
            let f = self.face_normal(t);
            let s: f64 = self.triangles[t].iter().map(|&v| dot(f, self.normals[v as usize])).sum();
            s >= 0.0
        })
    }
}

/// `%g`-style formatting with six significant digits.
fn g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..6).contains(&e) {
        let s = format!("{:.*}", (5 - e).max(0) as usize, x);
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
        s.to_string()
    } else {
        format!("{x:.5e}")
    }
}

/// Writes meshes as OBJ, one `g level_<level>` group per mesh.
pub fn write_obj<W: Write>(mut w: W, meshes: &[IsoMesh]) -> Result<()> {
    let mut offset = 1usize;
    for m in meshes {
        writeln!(w, "g level_{}", m.level)?;
        for v in &m.vertices {
            writeln!(w, "v {} {} {}", g6(v[0]), g6(v[1]), g6(v[2]))?;
        }
        for n in &m.normals {
            writeln!(w, "vn {} {} {}", g6(n[0]), g6(n[1]), g6(n[2]))?;
        }
        for t in &m.triangles {
            let [a, b, c] = t.map(|i| i as usize + offset);
            writeln!(w, "f {a}//{a} {b}//{b} {c}//{c}")?;
        }
        offset += m.vertices.len();
    }
    Ok(())
}

/// Reads the OBJ subset written by [`write_obj`]. Records before the first
/// group form a mesh of level 0.
pub fn read_obj<R: BufRead>(r: R) -> Result<Vec<IsoMesh>> {
    let mut out: Vec<IsoMesh> = Vec::new();
    let mut offset = 0usize;
    let err = |row: usize, message: String| Error::Parse { row, message };
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let row = i + 1;
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        let nums = |rest: &[&str]| -> Result<[f64; 3]> {
            if rest.len() != 3 {
                return Err(err(row, format!("expected 3 numbers, found {}", rest.len())));
            }
            let mut p = [0.0; 3];
            for (m, s) in rest.iter().enumerate() {
                p[m] = s.parse().map_err(|_| err(row, format!("not a number: '{s}'")))?;
            }
            Ok(p)
        };
        if tag == "g" {
            if let Some(prev) = out.last() {
                offset += prev.vertices.len();
            }
            let level = rest
                .first()
                .and_then(|s| s.strip_prefix("level_"))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(row, format!("unrecognized group '{}'", rest.join(" "))))?;
            out.push(IsoMesh::empty(level));
            continue;
        }
        if out.is_empty() && matches!(tag, "v" | "vn" | "f") {
            out.push(IsoMesh::empty(0.0));
        }
        let Some(mesh) = out.last_mut() else { continue };
        match tag {
            "v" => mesh.vertices.push(nums(&rest)?),
            "vn" => mesh.normals.push(nums(&rest)?),
            "f" => {
                if rest.len() != 3 {
                    return Err(err(row, "only triangles are supported".into()));
                }
                let mut t = [0u32; 3];
                for (m, s) in rest.iter().enumerate() {
                    let v: usize = s
                        .split('/')
                        .next()
                        .and_then(|x| x.parse().ok())
                        .ok_or_else(|| err(row, format!("bad face index '{s}'")))?;
                    let local = v
                        .checked_sub(offset + 1)
                        .filter(|&l| l < mesh.vertices.len())
                        .ok_or_else(|| err(row, format!("face index {v} out of range")))?;
                    t[m] = local as u32;
                }
                mesh.triangles.push(t);
            }
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> IsoMesh {
        IsoMesh {
            level: 0.5,
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            normals: vec![[0.0, 0.0, 1.0]; 3],
            triangles: vec![[0, 1, 2]],
        }
    }

    #[test]
    fn general_format() {
        assert_eq!(g6(0.5), "0.5");
        assert_eq!(g6(-1.0), "-1");
        assert_eq!(g6(1.0 / 3.0), "0.333333");
        assert_eq!(g6(123456.7), "123457");
        assert_eq!(g6(2.5e-7), "2.50000e-7");
    }

    #[test]
    fn single_triangle_obj() {
        let mut buf = Vec::new();
        write_obj(&mut buf, &[triangle()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(text.lines().filter(|l| l.starts_with("vn ")).count(), 3);
        let faces: Vec<&str> = text.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!(faces, ["f 1//1 2//2 3//3"]);
        let back = read_obj(text.as_bytes()).unwrap();
        assert_eq!(back, vec![triangle()]);
    }

    #[test]
    fn empty_obj_is_valid() {
        let mut buf = Vec::new();
        write_obj(&mut buf, &[IsoMesh::empty(0.11)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.lines().any(|l| l.starts_with("v ") || l.starts_with("f ")));
        let back = read_obj(text.as_bytes()).unwrap();
        assert_eq!(back, vec![IsoMesh::empty(0.11)]);
    }

    #[test]
    fn groups_have_their_own_indices() {
        let mut second = triangle();
        second.level = 0.75;
        let mut buf = Vec::new();
        write_obj(&mut buf, &[triangle(), second.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("f 4//4 5//5 6//6"));
        assert_eq!(read_obj(text.as_bytes()).unwrap(), vec![triangle(), second]);
        assert!(read_obj("v 0 0 0\nf 1 2 3\n".as_bytes()).is_err());
    }

    #[test]
    fn topology_helpers() {
        let t = triangle();
        assert_eq!(t.components(), 1);
        assert_eq!(t.boundary_edges(), 3);
        assert!(t.consistently_oriented());
        assert!(t.normals_agree_with_winding());
        assert!((t.area() - 0.5).abs() < 1e-15);
    }
}
