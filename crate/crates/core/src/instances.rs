//! Instance generators: random digraphs, matching Min-Rep instances, and the
//! two integrality-gap constructions with explicit fractional certificates.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DiGraph, Edge, EdgeId, GraphError, Path, VertexId};
use crate::spanner_lp::{DemandFlow, FractionalSolution, PathFlow, SolveMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("stretch k must be an odd integer >= 3, got {0}")]
    InvalidK(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "model")]
pub enum LengthModel {
    Unit,
    Uniform { lo: f64, hi: f64 },
}

/// Each ordered pair `(u,v)`, `u ≠ v`, becomes an edge independently with
/// probability `p`, in row-major pair order.
pub fn gen_random_digraph(n: usize, p: f64, lengths: LengthModel, seed: u64) -> Result<DiGraph, InstanceError> {
    if n < 2 {
        return Err(InstanceError::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(InstanceError::InvalidParameter(format!("edge probability must be in (0,1], got {p}")));
    }
    if let LengthModel::Uniform { lo, hi } = lengths {
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(InstanceError::InvalidParameter(format!("bad length range [{lo},{hi}]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let keep = p >= 1.0 || rng.random::<f64>() < p;
            if keep {
                let length = match lengths {
                    LengthModel::Unit => 1.0,
                    LengthModel::Uniform { lo, hi } if lo == hi => lo,
                    LengthModel::Uniform { lo, hi } => rng.random_range(lo..=hi),
                };
                edges.push(Edge { source: u, target: v, length, cost: 1.0 });
            }
        }
    }
    Ok(DiGraph::new(n, edges)?)
}

/// Min-Rep with `r/2` left groups `U_i`, `r/2` right groups `V_j`, each of
/// size `q`, where every group pair is a superedge realized by a perfect
/// matching. `matchings[i * (r/2) + j][a] = b` pairs `U_i[a]` with `V_j[b]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinRepInstance {
    pub r: usize,
    pub q: usize,
    pub matchings: Vec<Vec<usize>>,
}

impl MinRepInstance {
    pub fn half(&self) -> usize {
        self.r / 2
    }

    pub fn num_vertices(&self) -> usize {
        self.r * self.q
    }

    /// Left vertices come first, group by group.
    pub fn u_vertex(&self, i: usize, a: usize) -> usize {
        i * self.q + a
    }

    pub fn v_vertex(&self, j: usize, b: usize) -> usize {
        (self.half() + j) * self.q + b
    }

    pub fn matching(&self, i: usize, j: usize) -> &[usize] {
        &self.matchings[i * self.half() + j]
    }

    /// `(u, v)` pairs of all matching edges, ordered by group pair.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.half() {
            for j in 0..self.half() {
                for (a, &b) in self.matching(i, j).iter().enumerate() {
                    out.push((self.u_vertex(i, a), self.v_vertex(j, b)));
                }
            }
        }
        out
    }

    pub fn identity(r: usize, q: usize) -> Result<Self, InstanceError> {
        check_minrep(r, q)?;
        Ok(Self { r, q, matchings: vec![(0..q).collect(); (r / 2) * (r / 2)] })
    }
}

fn check_minrep(r: usize, q: usize) -> Result<(), InstanceError> {
    if r == 0 || r % 2 != 0 {
        return Err(InstanceError::InvalidParameter(format!("group count must be even and positive, got {r}")));
    }
    if q == 0 {
        return Err(InstanceError::InvalidParameter("group size must be at least 1".into()));
    }
    Ok(())
}

/// All `r²/4` group pairs are superedges, each with a seeded random matching.
pub fn gen_synthetic_minrep(r: usize, q: usize, seed: u64) -> Result<MinRepInstance, InstanceError> {
    check_minrep(r, q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (r / 2) * (r / 2);
    let matchings = (0..pairs)
        .map(|_| {
            let mut perm: Vec<usize> = (0..q).collect();
            // Fisher-Yates
            for i in (1..q).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            perm
        })
        .collect();
    Ok(MinRepInstance { r, q, matchings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    MinrepKSpanner,
    #[serde(rename = "setcover_2spanner")]
    Setcover2Spanner,
}

/// The set system whose elements are the nonzero vectors of `F_2^q` and
/// whose sets are `S_α = {e : α·e = 1}` for every `α`, including `α = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCoverWitness {
    pub q: usize,
    pub num_elements: usize,
    /// Element indices of each set; element `i` is the vector `i + 1`.
    pub sets: Vec<Vec<usize>>,
    pub aux_vertices: Vec<VertexId>,
    pub set_vertices: Vec<VertexId>,
    pub element_vertices: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum GapWitness {
    MinRep { instance: MinRepInstance },
    SetCover(SetCoverWitness),
}

/// Everything about a gap instance except the graph and certificate, which
/// travel in their own files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapMeta {
    pub kind: GapKind,
    /// Stretch of the spanner problem.
    pub k: f64,
    pub params: BTreeMap<String, f64>,
    pub predicted_fractional_cost_bound: f64,
    pub witness: GapWitness,
    /// Edges that must be chosen together (the two arcs of an undirected
    /// edge); singletons for directed instances.
    pub edge_groups: Vec<Vec<EdgeId>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapInstance {
    pub graph: DiGraph,
    pub meta: GapMeta,
    pub certificate: FractionalSolution,
}

impl GapInstance {
    pub fn kind(&self) -> GapKind {
        self.meta.kind
    }
}

struct CertBuilder<'g> {
    g: &'g DiGraph,
    flows: Vec<DemandFlow>,
}

impl<'g> CertBuilder<'g> {
    fn route(&mut self, demand: EdgeId, routes: Vec<(Vec<VertexId>, f64)>) {
        let e = self.g.edge(demand);
        let paths = routes
            .into_iter()
            .map(|(vs, flow)| PathFlow { path: Path::from_vertices(self.g, &vs).expect("certificate route is a path"), flow })
            .collect();
        self.flows.push(DemandFlow { demand: (e.source, e.target), fault: None, paths });
    }

    fn finish(mut self, x: Vec<f64>) -> FractionalSolution {
        let pos: std::collections::HashMap<(VertexId, VertexId), usize> =
            self.flows.iter().enumerate().map(|(i, f)| (f.demand, i)).collect();
        // flows in edge order
        let mut ordered = Vec::with_capacity(self.flows.len());
        for e in self.g.edges() {
            let i = pos[&(e.source, e.target)];
            ordered.push(std::mem::replace(
                &mut self.flows[i],
                DemandFlow { demand: (0, 0), fault: None, paths: Vec::new() },
            ));
        }
        let objective = self.g.edges().iter().zip(&x).map(|(e, v)| e.cost * v).sum();
        FractionalSolution { x, flows: ordered, objective, mode: SolveMode::Exact, epsilon: 0.0, lower_bound: 0.0 }
    }
}

/// Reduction from matching Min-Rep to unit-length directed k-spanner, with
/// `x = max(1, ⌈q/h⌉)` tail paths of `h = (k−1)/2` vertices per group.
///
/// Edge families, in id order: `E''` (matching edges, U to V), `E_C` (group
/// cliques), `E_M` (tail paths), `E_U` (tails into U groups and V groups into
/// tails), `E_I` (tail start to tail end for every group pair).
pub fn build_minrep_gap_instance(mr: &MinRepInstance, k: usize) -> Result<GapInstance, InstanceError> {
    if k < 3 || k % 2 == 0 {
        return Err(InstanceError::InvalidK(k));
    }
    check_minrep(mr.r, mr.q)?;
    if mr.q < 2 {
        return Err(InstanceError::InvalidParameter("group size must be at least 2".into()));
    }
    let (r, q, half) = (mr.r, mr.q, mr.half());
    let h = (k - 1) / 2;
    let x = (q.div_ceil(h)).max(1);
    let base = mr.num_vertices();
    // s^p_{i,j} and t^p_{i,j}, j in 0..h
    let s = |p: usize, i: usize, j: usize| base + (p * half + i) * h + j;
    let t = |p: usize, i: usize, j: usize| base + x * half * h + (p * half + i) * h + j;
    let n = base + 2 * x * half * h;

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut family: Vec<&'static str> = Vec::new();
    let mut push = |pairs: &mut Vec<(usize, usize)>, fam: &'static str, a: usize, b: usize| {
        pairs.push((a, b));
        family.push(fam);
    };
    for (a, b) in mr.edges() {
        push(&mut pairs, "E''", a, b);
    }
    for grp in 0..r {
        for a in 0..q {
            for b in 0..q {
                if a != b {
                    push(&mut pairs, "E_C", grp * q + a, grp * q + b);
                }
            }
        }
    }
    for p in 0..x {
        for i in 0..half {
            for j in 0..h.saturating_sub(1) {
                push(&mut pairs, "E_M", s(p, i, j), s(p, i, j + 1));
                push(&mut pairs, "E_M", t(p, i, j), t(p, i, j + 1));
            }
        }
    }
    for p in 0..x {
        for i in 0..half {
            for a in 0..q {
                push(&mut pairs, "E_U", s(p, i, h - 1), mr.u_vertex(i, a));
            }
            for b in 0..q {
                push(&mut pairs, "E_U", mr.v_vertex(i, b), t(p, i, 0));
            }
        }
    }
    for p in 0..x {
        for i in 0..half {
            for j in 0..half {
                push(&mut pairs, "E_I", s(p, i, 0), t(p, j, h - 1));
            }
        }
    }
    let g = DiGraph::from_pairs(n, &pairs)?;
    let cap = 2.0 / q as f64;
    let xs: Vec<f64> = family
        .iter()
        .map(|f| match *f {
            "E_M" => 1.0,
            "E_I" => 0.0,
            _ => cap,
        })
        .collect();

    let qf = q as f64;
    let group_of = |v: usize| v / q;
    let members = |grp: usize| (0..q).map(move |a| grp * q + a);
    let mut cb = CertBuilder { g: &g, flows: Vec::new() };
    for (id, &(a, b)) in pairs.iter().enumerate() {
        let routes: Vec<(Vec<usize>, f64)> = match family[id] {
            "E_M" => vec![(vec![a, b], 1.0)],
            "E''" => {
                // direct, plus through every group mate of a and its partner
                let i = group_of(a);
                let j = group_of(b) - half;
                let m = mr.matching(i, j);
                let mut rs = vec![(vec![a, b], 1.0 / qf)];
                for a2 in 0..q {
                    let u2 = mr.u_vertex(i, a2);
                    if u2 != a {
                        rs.push((vec![a, u2, mr.v_vertex(j, m[a2]), b], 1.0 / qf));
                    }
                }
                rs
            }
            "E_C" => {
                let share = 1.0 / (qf - 1.0);
                let mut rs = vec![(vec![a, b], share)];
                for c in members(group_of(a)) {
                    if c != a && c != b {
                        rs.push((vec![a, c, b], share));
                    }
                }
                rs
            }
            "E_U" if b < base => {
                // tail end into U_i: fan out over the group
                let mut rs = vec![(vec![a, b], 1.0 / qf)];
                for c in members(group_of(b)) {
                    if c != b {
                        rs.push((vec![a, c, b], 1.0 / qf));
                    }
                }
                rs
            }
            "E_U" => {
                // V_i into a tail start: fan in from the other group members
                let share = 1.0 / (qf - 1.0);
                members(group_of(a)).filter(|&c| c != a).map(|c| (vec![a, c, b], share)).collect()
            }
            "E_I" => {
                let p = (a - base) / (half * h);
                let i = ((a - base) / h) % half;
                let j = ((b - base - x * half * h) / h) % half;
                let m = mr.matching(i, j);
                (0..q)
                    .map(|a2| {
                        let mut vs: Vec<usize> = (0..h).map(|jj| s(p, i, jj)).collect();
                        vs.push(mr.u_vertex(i, a2));
                        vs.push(mr.v_vertex(j, m[a2]));
                        vs.extend((0..h).map(|jj| t(p, j, jj)));
                        (vs, 1.0 / qf)
                    })
                    .collect()
            }
            _ => unreachable!(),
        };
        cb.route(id, routes);
    }
    let certificate = cb.finish(xs);

    let count = |f: &str| family.iter().filter(|x| **x == f).count() as f64;
    let (rf, xf, kf) = (r as f64, x as f64, k as f64);
    let predicted = xf * rf * (kf - 3.0) / 2.0 + (2.0 / qf) * (rf * rf * qf / 4.0 + qf * qf * rf + xf * rf * qf);
    let params = BTreeMap::from([
        ("k".to_string(), kf),
        ("q".to_string(), qf),
        ("r".to_string(), rf),
        ("x".to_string(), xf),
        ("tail_length".to_string(), h as f64),
        ("n_minrep".to_string(), base as f64),
        ("E2".to_string(), count("E''")),
        ("E_C".to_string(), count("E_C")),
        ("E_M".to_string(), count("E_M")),
        ("E_U".to_string(), count("E_U")),
        ("E_I".to_string(), count("E_I")),
    ]);
    let edge_groups = (0..g.m()).map(|e| vec![e]).collect();
    Ok(GapInstance {
        meta: GapMeta {
            kind: GapKind::MinrepKSpanner,
            k: kf,
            params,
            predicted_fractional_cost_bound: predicted,
            witness: GapWitness::MinRep { instance: mr.clone() },
            edge_groups,
        },
        graph: g,
        certificate,
    })
}

/// `(N, sets)` of the `F_2^q` system: `N = 2^q − 1` elements, `2^q` sets.
pub fn f2_set_system(q: usize) -> (usize, Vec<Vec<usize>>) {
    let big_m = 1usize << q;
    let n = big_m - 1;
    let sets = (0..big_m)
        .map(|alpha| (0..n).filter(|&e| ((alpha & (e + 1)).count_ones() & 1) == 1).collect())
        .collect();
    (n, sets)
}

pub fn build_setcover_gap_instance(q: usize) -> Result<GapInstance, InstanceError> {
    let aux = 1usize.checked_shl(2 * q as u32).filter(|_| q <= 12).unwrap_or(0);
    if aux == 0 {
        return Err(InstanceError::InvalidParameter(format!("q={q} is too large")));
    }
    build_setcover_gap_with_aux(q, aux)
}

/// Set-cover reduction to undirected 2-spanner over the `F_2^q` system with
/// `aux` auxiliary vertices (`M²` in the full construction). Each undirected
/// edge is two arcs of cost 1/2 carrying the same capacity, so the objective
/// counts each undirected edge once.
pub fn build_setcover_gap_with_aux(q: usize, aux: usize) -> Result<GapInstance, InstanceError> {
    if q < 2 {
        return Err(InstanceError::InvalidParameter(format!("q must be at least 2, got {q}")));
    }
    if aux == 0 {
        return Err(InstanceError::InvalidParameter("need at least one auxiliary vertex".into()));
    }
    let (num_el, sets) = f2_set_system(q);
    let big_m = sets.len();
    let xv = |i: usize| i;
    let sv = |s: usize| aux + s;
    let ev = |e: usize| aux + big_m + e;
    let n = aux + big_m + num_el;

    let mut und: Vec<(usize, usize, f64)> = Vec::new();
    let cap_xs = 2.0 / big_m as f64;
    for i in 0..aux {
        for s in 0..big_m {
            und.push((xv(i), sv(s), cap_xs));
        }
    }
    for i in 0..aux {
        for e in 0..num_el {
            und.push((xv(i), ev(e), 0.0));
        }
    }
    for s in 0..big_m {
        for s2 in s + 1..big_m {
            und.push((sv(s), sv(s2), 1.0));
        }
    }
    for (s, members) in sets.iter().enumerate() {
        for &e in members {
            und.push((sv(s), ev(e), 1.0));
        }
    }
    let mut edges = Vec::with_capacity(2 * und.len());
    let mut xs = Vec::with_capacity(2 * und.len());
    let mut edge_groups = Vec::with_capacity(und.len());
    for &(a, b, c) in &und {
        edge_groups.push(vec![edges.len(), edges.len() + 1]);
        edges.push(Edge { source: a, target: b, length: 1.0, cost: 0.5 });
        edges.push(Edge { source: b, target: a, length: 1.0, cost: 0.5 });
        xs.push(c);
        xs.push(c);
    }
    let g = DiGraph::new(n, edges)?;

    let is_aux = |v: usize| v < aux;
    let is_set = |v: usize| v >= aux && v < aux + big_m;
    let is_el = |v: usize| v >= aux + big_m;
    let mf = big_m as f64;
    let mut cb = CertBuilder { g: &g, flows: Vec::new() };
    for id in 0..g.m() {
        let (a, b) = (g.edge(id).source, g.edge(id).target);
        let routes: Vec<(Vec<usize>, f64)> = if (is_aux(a) && is_set(b)) || (is_set(a) && is_aux(b)) {
            // 1/M on every aux-set edge, forwarded over set-set edges
            let (xi, s) = if is_aux(a) { (a, b) } else { (b, a) };
            let mut rs = Vec::new();
            for s2 in 0..big_m {
                let via = sv(s2);
                let mut vs = if via == s { vec![xi, s] } else { vec![xi, via, s] };
                if !is_aux(a) {
                    vs.reverse();
                }
                rs.push((vs, 1.0 / mf));
            }
            rs
        } else if (is_aux(a) && is_el(b)) || (is_el(a) && is_aux(b)) {
            // 2/M through each of the M/2 sets holding the element
            let (xi, el) = if is_aux(a) { (a, b) } else { (b, a) };
            let e = el - aux - big_m;
            sets.iter()
                .enumerate()
                .filter(|(_, mem)| mem.contains(&e))
                .map(|(s, _)| {
                    let mut vs = vec![xi, sv(s), el];
                    if !is_aux(a) {
                        vs.reverse();
                    }
                    (vs, 2.0 / mf)
                })
                .collect()
        } else {
            vec![(vec![a, b], 1.0)]
        };
        cb.route(id, routes);
    }
    let certificate = cb.finish(xs);
    let (auxf, nf) = (aux as f64, num_el as f64);
    let predicted = auxf * mf * (2.0 / mf) + mf * mf + mf * nf;
    let params = BTreeMap::from([
        ("q".to_string(), q as f64),
        ("N".to_string(), nf),
        ("M".to_string(), mf),
        ("aux".to_string(), auxf),
        ("n".to_string(), n as f64),
    ]);
    Ok(GapInstance {
        meta: GapMeta {
            kind: GapKind::Setcover2Spanner,
            k: 2.0,
            params,
            predicted_fractional_cost_bound: predicted,
            witness: GapWitness::SetCover(SetCoverWitness {
                q,
                num_elements: num_el,
                sets,
                aux_vertices: (0..aux).collect(),
                set_vertices: (0..big_m).map(sv).collect(),
                element_vertices: (0..num_el).map(ev).collect(),
            }),
            edge_groups,
        },
        graph: g,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_digraph_at_p1() {
        let g = gen_random_digraph(5, 1.0, LengthModel::Unit, 3).unwrap();
        assert_eq!(g.m(), 20);
    }

    #[test]
    fn generator_is_seeded() {
        let a = gen_random_digraph(12, 0.3, LengthModel::Uniform { lo: 1.0, hi: 4.0 }, 11).unwrap();
        let b = gen_random_digraph(12, 0.3, LengthModel::Uniform { lo: 1.0, hi: 4.0 }, 11).unwrap();
        assert_eq!(a, b);
        let c = gen_random_digraph(12, 0.3, LengthModel::Uniform { lo: 1.0, hi: 4.0 }, 12).unwrap();
        assert_ne!(a, c);
        assert!(gen_random_digraph(1, 0.5, LengthModel::Unit, 0).is_err());
        assert!(gen_random_digraph(4, 0.0, LengthModel::Unit, 0).is_err());
    }

    #[test]
    fn minrep_counts() {
        let mr = gen_synthetic_minrep(2, 1, 0).unwrap();
        assert_eq!(mr.edges(), vec![(0, 1)]);
        let mr = gen_synthetic_minrep(4, 3, 5).unwrap();
        assert_eq!(mr.matchings.len(), 4);
        assert_eq!(mr.edges().len(), 12);
        for m in &mr.matchings {
            let mut s = m.clone();
            s.sort();
            assert_eq!(s, vec![0, 1, 2]);
        }
        assert!(gen_synthetic_minrep(3, 2, 0).is_err());
    }

    #[test]
    fn minrep_gap_shape() {
        let mr = gen_synthetic_minrep(4, 4, 1).unwrap();
        let gap = build_minrep_gap_instance(&mr, 5).unwrap();
        let p = &gap.meta.params;
        assert_eq!(p["x"], 2.0);
        assert_eq!(p["tail_length"], 2.0);
        assert_eq!(gap.graph.n(), 16 + 2 * 2 * 2 * 2);
        assert_eq!(p["E2"], 16.0);
        assert_eq!(p["E_C"], 48.0);
        assert_eq!(p["E_M"], 8.0);
        assert_eq!(p["E_U"], 32.0);
        assert_eq!(p["E_I"], 8.0);
        let cert = &gap.certificate;
        let expect = p["E_M"] + 0.5 * (p["E2"] + p["E_C"] + p["E_U"]);
        assert!((cert.objective - expect).abs() < 1e-9);
        assert!(cert.objective <= gap.meta.predicted_fractional_cost_bound);
        cert.check_decomposition(&gap.graph, 5.0, None).unwrap();
        for f in &cert.flows {
            let e = gap.graph.find_edge(f.demand.0, f.demand.1).unwrap();
            if cert.x[e] == 0.0 {
                assert!(f.paths.iter().all(|p| p.path.hops() == 5));
            }
        }
    }

    #[test]
    fn minrep_rejects_even_k() {
        let mr = MinRepInstance::identity(2, 2).unwrap();
        assert_eq!(build_minrep_gap_instance(&mr, 4).unwrap_err(), InstanceError::InvalidK(4));
        assert_eq!(build_minrep_gap_instance(&mr, 1).unwrap_err(), InstanceError::InvalidK(1));
    }

    #[test]
    fn f2_system_halves() {
        let (n, sets) = f2_set_system(3);
        assert_eq!(n, 7);
        assert_eq!(sets.len(), 8);
        assert!(sets[0].is_empty());
        for e in 0..n {
            assert_eq!(sets.iter().filter(|s| s.contains(&e)).count(), 4);
        }
    }

    #[test]
    fn setcover_gap_shape() {
        let gap = build_setcover_gap_instance(3).unwrap();
        assert_eq!(gap.graph.n(), 79);
        assert_eq!(gap.meta.predicted_fractional_cost_bound, 248.0);
        gap.certificate.check_decomposition(&gap.graph, 2.0, None).unwrap();
        for grp in &gap.meta.edge_groups {
            assert_eq!(gap.certificate.x[grp[0]], gap.certificate.x[grp[1]]);
        }
    }
}
