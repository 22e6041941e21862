//! Real linear generator for the reachable, symmetry-reduced part of ρ.
//!
//! The Liouvillian is assembled column by column over matrix units |i⟩⟨j|,
//! restricted to the entries reachable from ρ₀, merged along orbits of the
//! supplied basis permutations and finally rewritten in real coordinates
//! using ρ = ρ†.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::DMatrix;

use super::LindbladModel;
use crate::operator::SparseOperator;
use crate::C64;

type Entry = (usize, usize);

/// Compressed sparse rows over f64.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in rows {
            for (c, v) in r {
                if v != 0.0 {
                    indices.push(c as u32);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr {
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k] as usize];
            }
            *out = acc;
        }
    }
}

/// How a reachable entry ρ[i,j] is read from the real coordinates:
/// `y[re] + i·sign·y[im]`.
#[derive(Debug, Clone, Copy)]
struct EntryRef {
    re: usize,
    im: Option<usize>,
    sign: f64,
}

impl EntryRef {
    fn value(&self, y: &[f64]) -> C64 {
        match self.im {
            Some(im) => C64::new(y[self.re], self.sign * y[im]),
            None => C64::new(y[self.re], 0.0),
        }
    }

    /// Adds `Re(c·x)` to `out`.
    fn add_real(&self, c: C64, out: &mut BTreeMap<usize, f64>) {
        *out.entry(self.re).or_default() += c.re;
        if let Some(im) = self.im {
            *out.entry(im).or_default() -= self.sign * c.im;
        }
    }

    /// Adds `Im(c·x)` to `out`.
    fn add_imag(&self, c: C64, out: &mut BTreeMap<usize, f64>) {
        *out.entry(self.re).or_default() += c.im;
        if let Some(im) = self.im {
            *out.entry(im).or_default() += self.sign * c.re;
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ReducedGenerator {
    n: usize,
    support: Vec<Entry>,
    refs: Vec<EntryRef>,
    pub a: Csr,
    pub n_coords: usize,
    pub symmetries_used: usize,
}

/// Column lists of a sparse operator: `cols[c] = [(row, value)]`.
fn columns(op: &SparseOperator) -> Vec<Vec<(usize, C64)>> {
    let mut cols = vec![Vec::new(); op.dim()];
    for (r, c, v) in op.iter() {
        cols[c].push((r, v));
    }
    cols
}

struct Superop {
    k_cols: Vec<Vec<(usize, C64)>>,
    l_cols: Vec<Vec<Vec<(usize, C64)>>>,
}

impl Superop {
    fn new(model: &LindbladModel) -> Self {
        // K = −iH − ½ Σ L†L, so that L(ρ) = Kρ + ρK† + Σ LρL†.
        let mut k = model.hamiltonian().scale(C64::new(0.0, -1.0));
        for l in model.jumps() {
            k = &k - &(&l.adjoint() * l).scale(C64::new(0.5, 0.0));
        }
        Superop {
            k_cols: columns(&k),
            l_cols: model.jumps().iter().map(columns).collect(),
        }
    }

    /// Image of the matrix unit |i⟩⟨j|.
    fn column(&self, (i, j): Entry) -> Vec<(Entry, C64)> {
        let mut acc: BTreeMap<Entry, C64> = BTreeMap::new();
        for &(a, v) in &self.k_cols[i] {
            *acc.entry((a, j)).or_default() += v;
        }
        for &(b, v) in &self.k_cols[j] {
            *acc.entry((i, b)).or_default() += v.conj();
        }
        for l in &self.l_cols {
            for &(a, va) in &l[i] {
                for &(b, vb) in &l[j] {
                    *acc.entry((a, b)).or_default() += va * vb.conj();
                }
            }
        }
        acc.into_iter()
            .filter(|(_, v)| *v != C64::new(0.0, 0.0))
            .collect()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

fn close_enough(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= 1e-12 * scale.max(1e-300)
}

impl ReducedGenerator {
    pub fn build(
        model: &LindbladModel,
        rho0: &DMatrix<C64>,
        symmetries: &[Vec<usize>],
    ) -> ReducedGenerator {
        let n = model.dim();
        let sup = Superop::new(model);

        // Reachable entries, breadth first from the nonzero entries of ρ₀.
        let mut index: HashMap<Entry, usize> = HashMap::new();
        let mut support: Vec<Entry> = Vec::new();
        let mut cols: Vec<Vec<(Entry, C64)>> = Vec::new();
        let mut queue = VecDeque::new();
        for j in 0..n {
            for i in 0..n {
                if rho0[(i, j)] != C64::new(0.0, 0.0) {
                    index.insert((i, j), support.len());
                    support.push((i, j));
                    queue.push_back((i, j));
                }
            }
        }
        while let Some(e) = queue.pop_front() {
            let col = sup.column(e);
            for &(o, _) in &col {
                if !index.contains_key(&o) {
                    index.insert(o, support.len());
                    support.push(o);
                    queue.push_back(o);
                }
            }
            cols.push(col);
        }
        // `cols` follows discovery order, which is also `support` order.
        let m = support.len();

        // Orbits under the symmetry generators that are verified to hold.
        let mut uf = UnionFind((0..m).collect());
        let mut used = 0;
        let scale = cols
            .iter()
            .flatten()
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        let rho_scale = rho0.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for perm in symmetries {
            if perm.len() != n {
                continue;
            }
            let map = |(i, j): Entry| (perm[i], perm[j]);
            let ok = support.iter().enumerate().all(|(s, &e)| {
                let pe = map(e);
                let Some(&ps) = index.get(&pe) else {
                    return false;
                };
                if !close_enough(rho0[pe], rho0[e], rho_scale) {
                    return false;
                }
                let a = &cols[s];
                let b = &cols[ps];
                if a.len() != b.len() {
                    return false;
                }
                let bm: HashMap<Entry, C64> = b.iter().copied().collect();
                a.iter().all(|&(o, v)| {
                    bm.get(&map(o))
                        .is_some_and(|&w| close_enough(v, w, scale))
                })
            });
            if ok {
                used += 1;
                for (s, &e) in support.iter().enumerate() {
                    uf.union(s, index[&map(e)]);
                }
            } else {
                log::debug!("symmetry rejected: generator does not commute with the model");
            }
        }

        // Orbits ordered by their smallest member; representative = root.
        let mut orbit_of = vec![0usize; m];
        let mut roots: BTreeMap<usize, usize> = BTreeMap::new();
        let mut reps = Vec::new();
        for s in 0..m {
            let r = uf.find(s);
            let next = roots.len();
            let id = *roots.entry(r).or_insert_with(|| {
                reps.push(r);
                next
            });
            orbit_of[s] = id;
        }
        let n_orbits = reps.len();
        let transpose_orbit = |o: usize| {
            let (i, j) = support[reps[o]];
            orbit_of[index[&(j, i)]]
        };

        // Real coordinates per orbit.
        let mut orbit_ref: Vec<Option<EntryRef>> = vec![None; n_orbits];
        let mut primary = vec![false; n_orbits];
        let mut n_coords = 0;
        for o in 0..n_orbits {
            if orbit_ref[o].is_some() {
                continue;
            }
            let t = transpose_orbit(o);
            if t == o {
                orbit_ref[o] = Some(EntryRef {
                    re: n_coords,
                    im: None,
                    sign: 1.0,
                });
                primary[o] = true;
                n_coords += 1;
            } else {
                orbit_ref[o] = Some(EntryRef {
                    re: n_coords,
                    im: Some(n_coords + 1),
                    sign: 1.0,
                });
                orbit_ref[t] = Some(EntryRef {
                    re: n_coords,
                    im: Some(n_coords + 1),
                    sign: -1.0,
                });
                primary[o] = true;
                n_coords += 2;
            }
        }
        let orbit_ref: Vec<EntryRef> = orbit_ref.into_iter().map(Option::unwrap).collect();
        let refs: Vec<EntryRef> = orbit_of.iter().map(|&o| orbit_ref[o]).collect();

        // Rows of the superoperator for the representative entries only.
        let mut is_rep_row = vec![usize::MAX; m];
        for (o, &r) in reps.iter().enumerate() {
            if primary[o] {
                is_rep_row[r] = o;
            }
        }
        let mut rep_rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n_orbits];
        for (s_in, col) in cols.iter().enumerate() {
            for &(e_out, v) in col {
                let s_out = index[&e_out];
                let o = is_rep_row[s_out];
                if o != usize::MAX {
                    rep_rows[o].push((s_in, v));
                }
            }
        }

        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_coords];
        for o in 0..n_orbits {
            if !primary[o] {
                continue;
            }
            let target = orbit_ref[o];
            for &(s_in, c) in &rep_rows[o] {
                refs[s_in].add_real(c, &mut rows[target.re]);
                if let Some(im) = target.im {
                    refs[s_in].add_imag(c, &mut rows[im]);
                }
            }
        }

        ReducedGenerator {
            n,
            support,
            refs,
            a: Csr::from_rows(rows),
            n_coords,
            symmetries_used: used,
        }
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    /// Real coordinates of ρ (read at orbit representatives).
    pub fn encode(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        let mut y = vec![0.0; self.n_coords];
        for (s, &e) in self.support.iter().enumerate() {
            let r = self.refs[s];
            let v = rho[e];
            y[r.re] = v.re;
            if let Some(im) = r.im {
                y[im] = r.sign * v.im;
            }
        }
        y
    }

    pub fn decode(&self, y: &[f64]) -> DMatrix<C64> {
        let mut rho = DMatrix::zeros(self.n, self.n);
        for (s, &e) in self.support.iter().enumerate() {
            rho[e] = self.refs[s].value(y);
        }
        rho
    }

    /// Weights `w` with `w·y = Re Tr(A ρ)`.
    pub fn functional(&self, a: &SparseOperator) -> Vec<f64> {
        let mut acc = BTreeMap::new();
        let idx: HashMap<Entry, usize> = self
            .support
            .iter()
            .enumerate()
            .map(|(s, &e)| (e, s))
            .collect();
        for (r, c, v) in a.iter() {
            // Tr(Aρ) = Σ A[r,c] ρ[c,r]
            if let Some(&s) = idx.get(&(c, r)) {
                self.refs[s].add_real(v, &mut acc);
            }
        }
        let mut w = vec![0.0; self.n_coords];
        for (k, v) in acc {
            w[k] = v;
        }
        w
    }
}
