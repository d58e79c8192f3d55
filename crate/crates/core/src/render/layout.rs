use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;

use rand::Rng;

use crate::molgraph::MolecularGraph;
use crate::rng::sample_rng;

/// 2-D atom coordinates in bond-length units.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub coords: Vec<[f64; 2]>,
}

impl Layout {
    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.coords {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

fn distances_from(graph: &MolecularGraph, start: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.atom_count()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in graph.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

// Shortest path from `a` to `b` that avoids the direct bond between them.
fn ring_through(graph: &MolecularGraph, a: usize, b: usize) -> Option<Vec<usize>> {
    let n = graph.atom_count();
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[a] = true;
    let mut queue = VecDeque::from([a]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in graph.neighbors(u) {
            if (u == a && v == b) || seen[v] {
                continue;
            }
            seen[v] = true;
            prev[v] = u;
            if v == b {
                let mut path = vec![b];
                let mut x = b;
                while x != a {
                    x = prev[x];
                    path.push(x);
                }
                return Some(path);
            }
            queue.push_back(v);
        }
    }
    None
}

/// Smallest ring through each ring bond, deduplicated, as cyclic atom
/// sequences. Rings longer than `max_size` are dropped.
pub fn small_rings(graph: &MolecularGraph, max_size: usize) -> Vec<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let mut rings = Vec::new();
    for bond in graph.bonds() {
        if let Some(ring) = ring_through(graph, bond.i, bond.j) {
            let key: BTreeSet<usize> = ring.iter().copied().collect();
            if ring.len() <= max_size && seen.insert(key) {
                rings.push(ring);
            }
        }
    }
    rings
}

/// Deterministic stress-minimising layout.
///
/// Target distances are 1 for bonds, the chord lengths of a regular polygon
/// for atoms in a common small ring, √3 for atoms two bonds apart (the
/// 120° zig-zag) and a shrinking multiple of the graph distance otherwise.
/// Starting points come from `seed`; the same graph and seed always give
/// the same coordinates.
pub fn layout(graph: &MolecularGraph, seed: u64) -> Layout {
    let n = graph.atom_count();
    if n == 1 {
        return Layout { coords: vec![[0.0, 0.0]] };
    }
    let mut target = vec![0.0; n * n];
    for i in 0..n {
        let dist = distances_from(graph, i);
        for j in 0..n {
            target[i * n + j] = match dist[j] {
                0 => 0.0,
                1 => 1.0,
                2 => 3f64.sqrt(),
                d => 0.85 * d as f64 + 0.3,
            };
        }
    }
    for ring in small_rings(graph, 8) {
        let k = ring.len();
        for a in 0..k {
            for b in 0..k {
                let steps = a.abs_diff(b).min(k - a.abs_diff(b));
                if steps > 0 {
                    target[ring[a] * n + ring[b]] = (PI * steps as f64 / k as f64).sin() / (PI / k as f64).sin();
                }
            }
        }
    }

    let mut rng = sample_rng(seed, n as u64);
    let radius = (n as f64).sqrt();
    let mut x: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(-radius..radius), rng.random_range(-radius..radius)])
        .collect();

    // stress majorization, Jacobi sweeps
    for _ in 0..400 {
        let mut next = vec![[0.0; 2]; n];
        for i in 0..n {
            let mut acc = [0.0; 2];
            let mut wsum = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let t = target[i * n + j];
                let w = t.powi(-2);
                let dx = [x[i][0] - x[j][0], x[i][1] - x[j][1]];
                let len = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt().max(1e-9);
                for k in 0..2 {
                    acc[k] += w * (x[j][k] + t * dx[k] / len);
                }
                wsum += w;
            }
            next[i] = [acc[0] / wsum, acc[1] / wsum];
        }
        x = next;
    }

    // centre and turn the longest axis horizontal so output is canonical
    let c = [
        x.iter().map(|p| p[0]).sum::<f64>() / n as f64,
        x.iter().map(|p| p[1]).sum::<f64>() / n as f64,
    ];
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in &x {
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (s, co) = angle.sin_cos();
    let coords = x
        .iter()
        .map(|p| {
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            [co * dx + s * dy, -s * dx + co * dy]
        })
        .collect();
    Layout { coords }
}
