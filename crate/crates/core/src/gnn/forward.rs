use std::collections::BTreeMap;

use super::params::bond_name;
use super::{DropoutMaskSet, GnnError, ModelKind, ModelParams};
use crate::autodiff::{Tape, Tensor, Var};
use crate::molgraph::{featurize, BondOrder, MolecularGraph};

/// Degrees above this share the last NFP weight bucket.
pub const MAX_DEGREE_BUCKET: usize = 4;

/// Edge and degree index lists of one molecule, precomputed for the
/// gather/scatter primitives.
#[derive(Clone, Debug)]
pub struct GraphIndex {
    atoms: usize,
    features: Vec<usize>,
    // both directions of every bond
    src: Vec<usize>,
    dst: Vec<usize>,
    typed: Vec<(Vec<usize>, Vec<usize>)>,
    buckets: Vec<Vec<usize>>,
}

impl GraphIndex {
    pub fn new(graph: &MolecularGraph, params: &ModelParams) -> Self {
        Self::with_features(graph, featurize(graph, &params.vocab))
    }

    pub fn with_features(graph: &MolecularGraph, features: Vec<usize>) -> Self {
        let n = graph.atom_count();
        let mut src = Vec::new();
        let mut dst = Vec::new();
        let mut typed = vec![(Vec::new(), Vec::new()); BondOrder::ALL.len()];
        for b in graph.bonds() {
            for (u, v) in [(b.i, b.j), (b.j, b.i)] {
                src.push(u);
                dst.push(v);
                let slot = &mut typed[b.order.index()];
                slot.0.push(u);
                slot.1.push(v);
            }
        }
        let mut buckets = vec![Vec::new(); MAX_DEGREE_BUCKET];
        for i in 0..n {
            let k = graph.degree(i).clamp(1, MAX_DEGREE_BUCKET);
            buckets[k - 1].push(i);
        }
        Self {
            atoms: n,
            features,
            src,
            dst,
            typed,
            buckets,
        }
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }
}

/// Node feature matrix `φ`: one embedding row per atom.
pub fn embed(features: &[usize], params: &ModelParams) -> Tensor {
    let table = params.embedding();
    let unknown = params.vocab.unknown_index();
    let d = table.cols();
    let mut data = Vec::with_capacity(features.len() * d);
    for &f in features {
        data.extend_from_slice(table.row(f.min(unknown)));
    }
    Tensor::new(features.len(), d, data).expect("embedding rows are finite")
}

pub(crate) struct Bound(BTreeMap<String, Var>);

impl Bound {
    /// Puts every weight except the embedding on the tape, as leaves when
    /// gradients are needed and as constants otherwise.
    pub(crate) fn new(tape: &mut Tape, params: &ModelParams, trainable: bool) -> Self {
        let vars = params
            .tensors()
            .iter()
            .filter(|(name, _)| name.as_str() != "embedding")
            .map(|(name, t)| {
                let v = if trainable { tape.leaf(t.clone()) } else { tape.constant(t.clone()) };
                (name.clone(), v)
            })
            .collect();
        Self(vars)
    }

    fn get(&self, name: &str) -> Var {
        self.0[name]
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.0.iter()
    }
}

/// Records the model on `tape` and returns the 1×1 raw score.
///
/// `phi` is the node feature matrix, usually a leaf so that gradients with
/// respect to it come out of [`Tape::backward`]. Passing `None` for `masks`
/// runs without dropout.
pub fn forward(
    tape: &mut Tape,
    params: &ModelParams,
    index: &GraphIndex,
    phi: Var,
    masks: Option<&DropoutMaskSet>,
) -> Result<Var, GnnError> {
    let bound = Bound::new(tape, params, false);
    forward_bound(tape, params, &bound, index, phi, masks)
}

pub(crate) fn forward_bound(
    tape: &mut Tape,
    params: &ModelParams,
    bound: &Bound,
    index: &GraphIndex,
    phi: Var,
    masks: Option<&DropoutMaskSet>,
) -> Result<Var, GnnError> {
    let n = index.atoms;
    let d = params.dims.hidden;
    if tape.shape(phi) != [n, d] {
        return Err(GnnError::Config(format!(
            "feature matrix has shape {:?}, model expects [{n}, {d}]",
            tape.shape(phi)
        )));
    }
    if let Some(m) = masks {
        if m.rounds() != params.dims.rounds {
            return Err(GnnError::Config(format!(
                "{} dropout masks for a {}-round model",
                m.rounds(),
                params.dims.rounds
            )));
        }
    }
    let pooled = match params.kind {
        ModelKind::Nfp => nfp(tape, params, bound, index, phi, masks)?,
        ModelKind::Ggnn => ggnn(tape, params, bound, index, phi, masks)?,
    };
    let out = tape.matmul(pooled, bound.get("head.weight"))?;
    Ok(tape.add(out, bound.get("head.bias"))?)
}

fn dropout(tape: &mut Tape, h: Var, masks: Option<&DropoutMaskSet>, round: usize) -> Result<Var, GnnError> {
    match masks {
        Some(m) => Ok(tape.apply_mask(h, &m.masks()[round], m.scale())?),
        None => Ok(h),
    }
}

fn sum_rows(tape: &mut Tape, x: Var) -> Result<Var, GnnError> {
    let rows = tape.shape(x)[0];
    Ok(tape.scatter_add_rows(x, &vec![0; rows], 1)?)
}

fn nfp(
    tape: &mut Tape,
    params: &ModelParams,
    bound: &Bound,
    index: &GraphIndex,
    phi: Var,
    masks: Option<&DropoutMaskSet>,
) -> Result<Var, GnnError> {
    let n = index.atoms;
    let mut h = phi;
    let mut fingerprint = None;
    for l in 0..params.dims.rounds {
        // h_i + Σ_j h_j over neighbours
        let mut s = h;
        if !index.src.is_empty() {
            let msg = tape.gather_rows(h, &index.src)?;
            let agg = tape.scatter_add_rows(msg, &index.dst, n)?;
            s = tape.add(h, agg)?;
        }
        let mut pre: Option<Var> = None;
        for (b, atoms) in index.buckets.iter().enumerate() {
            if atoms.is_empty() {
                continue;
            }
            let k = b + 1;
            let rows = tape.gather_rows(s, atoms)?;
            let y = tape.matmul(rows, bound.get(&format!("conv{l}.deg{k}.weight")))?;
            let y = tape.add_row(y, bound.get(&format!("conv{l}.deg{k}.bias")))?;
            let y = tape.scatter_add_rows(y, atoms, n)?;
            pre = Some(match pre {
                Some(p) => tape.add(p, y)?,
                None => y,
            });
        }
        let act = tape.sigmoid(pre.expect("every atom falls in a bucket"))?;
        h = dropout(tape, act, masks, l)?;

        let z = tape.matmul(h, bound.get(&format!("readout{l}.weight")))?;
        let z = tape.add_row(z, bound.get(&format!("readout{l}.bias")))?;
        let z = tape.row_softmax(z)?;
        let z = sum_rows(tape, z)?;
        fingerprint = Some(match fingerprint {
            Some(f) => tape.add(f, z)?,
            None => z,
        });
    }
    Ok(fingerprint.expect("at least one round"))
}

fn ggnn(
    tape: &mut Tape,
    params: &ModelParams,
    bound: &Bound,
    index: &GraphIndex,
    phi: Var,
    masks: Option<&DropoutMaskSet>,
) -> Result<Var, GnnError> {
    let n = index.atoms;
    let d = params.dims.hidden;
    let mut h = phi;
    for l in 0..params.dims.rounds {
        let mut a: Option<Var> = None;
        for order in BondOrder::ALL {
            let (src, dst) = &index.typed[order.index()];
            if src.is_empty() {
                continue;
            }
            let hw = tape.matmul(h, bound.get(&format!("message.{}", bond_name(order))))?;
            let msg = tape.gather_rows(hw, src)?;
            let msg = tape.scatter_add_rows(msg, dst, n)?;
            a = Some(match a {
                Some(acc) => tape.add(acc, msg)?,
                None => msg,
            });
        }
        let a = match a {
            Some(a) => a,
            None => tape.constant(Tensor::zeros(n, d)),
        };

        let gate = |tape: &mut Tape, g: &str, hin: Var| -> Result<Var, GnnError> {
            let x = tape.matmul(a, bound.get(&format!("gru.w{g}")))?;
            let y = tape.matmul(hin, bound.get(&format!("gru.u{g}")))?;
            let s = tape.add(x, y)?;
            Ok(tape.add_row(s, bound.get(&format!("gru.{g}.bias")))?)
        };
        let z = gate(tape, "z", h)?;
        let z = tape.sigmoid(z)?;
        let r = gate(tape, "r", h)?;
        let r = tape.sigmoid(r)?;
        let rh = tape.mul(r, h)?;
        let cand = gate(tape, "h", rh)?;
        let cand = tape.tanh(cand)?;
        // h + z ⊙ (h̃ - h)
        let delta = tape.sub(cand, h)?;
        let step = tape.mul(z, delta)?;
        let next = tape.add(h, step)?;
        h = dropout(tape, next, masks, l)?;
    }

    let g1 = tape.matmul(h, bound.get("readout.gate_final"))?;
    let g2 = tape.matmul(phi, bound.get("readout.gate_initial"))?;
    let g = tape.add(g1, g2)?;
    let g = tape.add_row(g, bound.get("readout.gate.bias"))?;
    let g = tape.sigmoid(g)?;
    let p = tape.matmul(h, bound.get("readout.proj"))?;
    let p = tape.add_row(p, bound.get("readout.proj.bias"))?;
    let p = tape.tanh(p)?;
    let gp = tape.mul(g, p)?;
    sum_rows(tape, gp)
}

/// Raw score of one molecule for a given feature matrix.
pub fn score(
    params: &ModelParams,
    index: &GraphIndex,
    phi: &Tensor,
    masks: Option<&DropoutMaskSet>,
) -> Result<f64, GnnError> {
    let mut tape = Tape::new();
    let x = tape.constant(phi.clone());
    let out = forward(&mut tape, params, index, x, masks)?;
    Ok(tape.value(out).data()[0])
}

/// Raw score and its gradient with respect to `phi`.
pub fn score_and_gradient(
    params: &ModelParams,
    index: &GraphIndex,
    phi: &Tensor,
    masks: Option<&DropoutMaskSet>,
) -> Result<(f64, Tensor), GnnError> {
    let mut tape = Tape::new();
    let x = tape.leaf(phi.clone());
    let out = forward(&mut tape, params, index, x, masks)?;
    let mut grads = tape.backward(out)?;
    let g = grads.take(x).expect("leaf gradient");
    Ok((tape.value(out).data()[0], g))
}
