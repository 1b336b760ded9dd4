//! Invariant-function calculus on finite reductive groups: explicit group
//! tables for GL_n(F_q), block Levi subgroups, parabolic restriction and
//! induction, cuspidal projection, and the exact decomposition identities
//! relating them. Twisted tori (permutation twists of split tori) carry the
//! same calculus, which is trivial there since a torus has no proper
//! parabolic.
//!
//! All function values are exact rationals; every identity check here is an
//! exact equality with no tolerance.

use crate::apartment::{eq_roots, Facet};
use crate::exact::{qi, Q};
use crate::rootsys::{RootSystem, SimpleType};
use crate::Error;
use itertools::Itertools;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

/// Version stamp of the on-disk group-table cache format.
pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Hard cap on group orders for the brute-force machinery.
pub const MAX_GROUP_ORDER: u64 = 20000;

pub fn is_prime(q: u32) -> bool {
    q >= 2 && (2..q).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

/// |GL_n(F_q)| = ∏_{i<n} (q^n − q^i).
pub fn gl_order(n: usize, q: u32) -> u64 {
    let qn = (q as u64).pow(n as u32);
    (0..n).map(|i| qn - (q as u64).pow(i as u32)).product()
}

/// An explicit finite group of invertible n×n matrices over F_q, with its
/// conjugacy classes. Multiplication is done on the matrices directly and
/// resolved to indices through a hash of the entries.
#[derive(Clone, Debug)]
pub struct GroupTable {
    pub n: usize,
    pub q: u32,
    /// Row-major n×n matrices with entries in 0..q, in enumeration order.
    pub mats: Vec<Vec<u8>>,
    index: HashMap<u64, usize>,
    pub inv: Vec<usize>,
    pub identity: usize,
    /// Conjugacy class index of each element.
    pub class_of: Vec<usize>,
    /// Element indices of each class, ordered by first occurrence.
    pub classes: Vec<Vec<usize>>,
    /// First element of each class.
    pub class_reps: Vec<usize>,
}

fn mat_key(m: &[u8]) -> u64 {
    m.iter().fold(0u64, |acc, &e| (acc << 3) | e as u64)
}

fn mat_mul_modq(a: &[u8], b: &[u8], n: usize, q: u32) -> Vec<u8> {
    let mut out = vec![0u8; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k] as u32;
            if aik == 0 {
                continue;
            }
            for j in 0..n {
                let t = out[i * n + j] as u32 + aik * b[k * n + j] as u32;
                out[i * n + j] = (t % q) as u8;
            }
        }
    }
    out
}

fn pow_mod(mut b: u64, mut e: u32, q: u64) -> u64 {
    let mut r = 1u64;
    b %= q;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % q;
        }
        b = b * b % q;
        e >>= 1;
    }
    r
}

/// Inverse of an invertible matrix over F_q by Gauss-Jordan elimination.
fn mat_inv_modq(m: &[u8], n: usize, q: u32) -> Option<Vec<u8>> {
    let qq = q as u64;
    let mut a: Vec<u64> = m.iter().map(|&e| e as u64).collect();
    let mut b: Vec<u64> = vec![0; n * n];
    for i in 0..n {
        b[i * n + i] = 1;
    }
    for c in 0..n {
        let p = (c..n).find(|&r| a[r * n + c] != 0)?;
        if p != c {
            for j in 0..n {
                a.swap(c * n + j, p * n + j);
                b.swap(c * n + j, p * n + j);
            }
        }
        let pinv = pow_mod(a[c * n + c], q - 2, qq);
        for j in 0..n {
            a[c * n + j] = a[c * n + j] * pinv % qq;
            b[c * n + j] = b[c * n + j] * pinv % qq;
        }
        for r in 0..n {
            if r != c && a[r * n + c] != 0 {
                let f = a[r * n + c];
                for j in 0..n {
                    a[r * n + j] = (a[r * n + j] + (qq - f % qq) * a[c * n + j]) % qq;
                    b[r * n + j] = (b[r * n + j] + (qq - f % qq) * b[c * n + j]) % qq;
                }
            }
        }
    }
    Some(b.iter().map(|&e| e as u8).collect())
}

impl GroupTable {
    pub fn order(&self) -> usize {
        self.mats.len()
    }

    pub fn index_of(&self, m: &[u8]) -> usize {
        self.index[&mat_key(m)]
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.index_of(&mat_mul_modq(&self.mats[i], &self.mats[j], self.n, self.q))
    }

    /// x g x^{-1}.
    pub fn conj(&self, x: usize, g: usize) -> usize {
        self.mul(self.mul(x, g), self.inv[x])
    }

    pub fn element_order(&self, i: usize) -> usize {
        let mut cur = i;
        let mut k = 1;
        while cur != self.identity {
            cur = self.mul(cur, i);
            k += 1;
        }
        k
    }
}

/// Enumerate GL_n(F_q) and compute its conjugacy classes by brute force.
pub fn build_gl(n: usize, q: u32) -> Result<GroupTable, Error> {
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if n == 0 || n > 3 {
        return Err(Error::Precondition(format!("build_gl: n = {n} out of range 1..=3")));
    }
    let order = gl_order(n, q);
    if order > MAX_GROUP_ORDER {
        return Err(Error::SizeCap(format!(
            "|GL_{n}(F_{q})| = {order} exceeds the cap of {MAX_GROUP_ORDER}"
        )));
    }
    let mut mats = Vec::with_capacity(order as usize);
    let nn = n * n;
    let total = (q as u64).pow(nn as u32);
    for code in 0..total {
        let mut m = vec![0u8; nn];
        let mut c = code;
        for e in m.iter_mut().rev() {
            *e = (c % q as u64) as u8;
            c /= q as u64;
        }
        if mat_inv_modq(&m, n, q).is_some() {
            mats.push(m);
        }
    }
    debug_assert_eq!(mats.len() as u64, order);
    finish_table(n, q, mats)
}

fn finish_table(n: usize, q: u32, mats: Vec<Vec<u8>>) -> Result<GroupTable, Error> {
    let index: HashMap<u64, usize> =
        mats.iter().enumerate().map(|(i, m)| (mat_key(m), i)).collect();
    let inv: Vec<usize> = mats
        .iter()
        .map(|m| {
            let mi = mat_inv_modq(m, n, q)
                .ok_or_else(|| Error::InvalidInput("non-invertible matrix in table".into()))?;
            Ok(index[&mat_key(&mi)])
        })
        .collect::<Result<_, Error>>()?;
    let mut ident = vec![0u8; n * n];
    for i in 0..n {
        ident[i * n + i] = 1;
    }
    let identity = index[&mat_key(&ident)];
    let mut g = GroupTable {
        n,
        q,
        mats,
        index,
        inv,
        identity,
        class_of: Vec::new(),
        classes: Vec::new(),
        class_reps: Vec::new(),
    };
    let order = g.order();
    let mut class_of = vec![usize::MAX; order];
    let mut classes = Vec::new();
    let mut reps = Vec::new();
    for e in 0..order {
        if class_of[e] != usize::MAX {
            continue;
        }
        let cid = classes.len();
        let mut members = Vec::new();
        for x in 0..order {
            let y = g.conj(x, e);
            if class_of[y] == usize::MAX {
                class_of[y] = cid;
                members.push(y);
            }
        }
        members.sort_unstable();
        classes.push(members);
        reps.push(e);
    }
    g.class_of = class_of;
    g.classes = classes;
    g.class_reps = reps;
    Ok(g)
}

// ---------------------------------------------------------------------------
// Disk cache for group tables
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format_version: u32,
    n: usize,
    q: u32,
    mats: Vec<Vec<u8>>,
    inv: Vec<usize>,
    class_of: Vec<usize>,
}

pub fn cache_path(dir: &Path, n: usize, q: u32) -> PathBuf {
    dir.join(format!("gl_{n}_{q}_v{CACHE_FORMAT_VERSION}.json"))
}

fn try_load_cached(path: &Path, n: usize, q: u32) -> Option<GroupTable> {
    let data = std::fs::read(path).ok()?;
    let cf: CacheFile = serde_json::from_slice(&data).ok()?;
    if cf.format_version != CACHE_FORMAT_VERSION || cf.n != n || cf.q != q {
        return None;
    }
    if cf.mats.len() as u64 != gl_order(n, q)
        || cf.inv.len() != cf.mats.len()
        || cf.class_of.len() != cf.mats.len()
        || cf.mats.iter().any(|m| m.len() != n * n || m.iter().any(|&e| e as u32 >= q))
    {
        return None;
    }
    // Rebuild the derived structures; the class partition is revalidated
    // against a freshly computed one only through cheap invariants here.
    let mut g = finish_table(n, q, cf.mats).ok()?;
    if g.inv != cf.inv || g.class_of.len() != cf.class_of.len() {
        return None;
    }
    // The recomputed classes are authoritative; the cached ones only need to
    // induce the same partition for the cache to be considered intact.
    let same_partition = g
        .class_of
        .iter()
        .zip(&cf.class_of)
        .all(|(&a, &b)| cf.class_of[g.classes[a][0]] == b);
    if !same_partition {
        return None;
    }
    g.class_of = g.class_of.clone();
    Some(g)
}

/// Build GL_n(F_q), reusing a disk cache when present. A corrupt or
/// mismatched cache file is ignored and overwritten with a fresh build.
pub fn build_gl_cached(n: usize, q: u32, cache_dir: &Path) -> Result<GroupTable, Error> {
    let path = cache_path(cache_dir, n, q);
    if let Some(g) = try_load_cached(&path, n, q) {
        return Ok(g);
    }
    let g = build_gl(n, q)?;
    let cf = CacheFile {
        format_version: CACHE_FORMAT_VERSION,
        n,
        q,
        mats: g.mats.clone(),
        inv: g.inv.clone(),
        class_of: g.class_of.clone(),
    };
    std::fs::create_dir_all(cache_dir)
        .and_then(|()| std::fs::write(&path, serde_json::to_vec(&cf).unwrap()))
        .map_err(|e| Error::Cache(format!("cannot write {}: {e}", path.display())))?;
    Ok(g)
}

// ---------------------------------------------------------------------------
// Levi subgroups and parabolic calculus
// ---------------------------------------------------------------------------

/// A block-diagonal Levi subgroup of a GL_n table, given by a composition of
/// n, with its own conjugacy classes (conjugacy inside the subgroup).
#[derive(Clone, Debug)]
pub struct LeviGroup {
    pub composition: Vec<usize>,
    /// Element indices into the parent table, sorted.
    pub elems: Vec<usize>,
    /// Parent element index → class index within this Levi.
    pub class_of: HashMap<usize, usize>,
    pub classes: Vec<Vec<usize>>,
    pub class_reps: Vec<usize>,
}

/// Half-open row/column ranges of the blocks of a composition.
fn block_ranges(comp: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut a = 0;
    for &c in comp {
        out.push((a, a + c));
        a += c;
    }
    out
}

fn block_of(ranges: &[(usize, usize)], i: usize) -> usize {
    ranges.iter().position(|&(a, b)| a <= i && i < b).unwrap()
}

/// Is the matrix block-diagonal for the composition?
fn is_block_diagonal(m: &[u8], n: usize, ranges: &[(usize, usize)]) -> bool {
    (0..n).all(|i| (0..n).all(|j| m[i * n + j] == 0 || block_of(ranges, i) == block_of(ranges, j)))
}

/// Is the matrix block-upper-triangular (lower when `lower`)?
fn is_block_triangular(m: &[u8], n: usize, ranges: &[(usize, usize)], lower: bool) -> bool {
    (0..n).all(|i| {
        (0..n).all(|j| {
            let (bi, bj) = (block_of(ranges, i), block_of(ranges, j));
            m[i * n + j] == 0 || if lower { bi >= bj } else { bi <= bj }
        })
    })
}

/// Block-diagonal part of a matrix (zero outside the blocks).
fn block_diag_part(m: &[u8], n: usize, ranges: &[(usize, usize)]) -> Vec<u8> {
    let mut out = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            if block_of(ranges, i) == block_of(ranges, j) {
                out[i * n + j] = m[i * n + j];
            }
        }
    }
    out
}

/// The Levi subgroup for a composition, with its internal conjugacy classes.
pub fn levi_group(g: &GroupTable, comp: &[usize]) -> LeviGroup {
    assert_eq!(comp.iter().sum::<usize>(), g.n, "composition must sum to n");
    let ranges = block_ranges(comp);
    let elems: Vec<usize> = (0..g.order())
        .filter(|&i| is_block_diagonal(&g.mats[i], g.n, &ranges))
        .collect();
    let mut class_of: HashMap<usize, usize> = HashMap::new();
    let mut classes = Vec::new();
    let mut reps = Vec::new();
    for &e in &elems {
        if class_of.contains_key(&e) {
            continue;
        }
        let cid = classes.len();
        let mut members = Vec::new();
        for &x in &elems {
            let y = g.conj(x, e);
            if let std::collections::hash_map::Entry::Vacant(v) = class_of.entry(y) {
                v.insert(cid);
                members.push(y);
            }
        }
        members.sort_unstable();
        classes.push(members);
        reps.push(e);
    }
    LeviGroup { composition: comp.to_vec(), elems, class_of, classes, class_reps: reps }
}

/// Does `fine` refine `coarse` blockwise (each coarse block split in place)?
pub fn refines(fine: &[usize], coarse: &[usize]) -> bool {
    let mut it = fine.iter();
    coarse.iter().all(|&c| {
        let mut acc = 0;
        while acc < c {
            match it.next() {
                Some(&f) => acc += f,
                None => return false,
            }
        }
        acc == c
    }) && it.next().is_none()
}

/// Unipotent radical (within the outer Levi) of the parabolic with the inner
/// Levi: block-diagonal for the outer composition and strictly
/// block-triangular with identity diagonal blocks for the inner one.
fn rel_unipotent(g: &GroupTable, outer: &LeviGroup, inner: &LeviGroup, lower: bool) -> Vec<usize> {
    let ranges_in = block_ranges(&inner.composition);
    outer
        .elems
        .iter()
        .copied()
        .filter(|&i| {
            let m = &g.mats[i];
            is_block_triangular(m, g.n, &ranges_in, lower)
                && block_diag_part(m, g.n, &ranges_in)
                    == g.mats[g.identity]
        })
        .collect()
}

/// A class function with exact rational values, indexed by the conjugacy
/// classes of whichever group it was built against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFunction {
    pub values: Vec<Q>,
}

impl ClassFunction {
    pub fn zero(num_classes: usize) -> Self {
        ClassFunction { values: vec![Q::zero(); num_classes] }
    }
    pub fn delta(class: usize, num_classes: usize) -> Self {
        let mut f = Self::zero(num_classes);
        f.values[class] = qi(1);
        f
    }
    pub fn constant(v: Q, num_classes: usize) -> Self {
        ClassFunction { values: vec![v; num_classes] }
    }
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Q::is_zero)
    }
    pub fn sub(&self, other: &Self) -> Self {
        ClassFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }
    pub fn add(&self, other: &Self) -> Self {
        ClassFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }
    pub fn scale(&self, c: Q) -> Self {
        ClassFunction { values: self.values.iter().map(|v| v * c).collect() }
    }
}

/// Parabolic restriction from the outer Levi to the inner one:
/// res(f)(m) = |U|^{-1} Σ_{u∈U} f(mu).
pub fn res_parabolic(
    g: &GroupTable,
    outer: &LeviGroup,
    inner: &LeviGroup,
    f: &ClassFunction,
) -> ClassFunction {
    let u = rel_unipotent(g, outer, inner, false);
    let inv_u = qi(u.len() as i64).recip();
    let values = inner
        .class_reps
        .iter()
        .map(|&m| {
            let s: Q = u.iter().map(|&uu| f.values[outer.class_of[&g.mul(m, uu)]]).sum();
            s * inv_u
        })
        .collect();
    ClassFunction { values }
}

/// Extension by zero f[P]: supported on P = M·U, with f[P](mu) = f(m).
/// Returned as a value per element of the outer Levi (by position in
/// `outer.elems`).
pub fn extend_by_zero(
    g: &GroupTable,
    outer: &LeviGroup,
    inner: &LeviGroup,
    f: &ClassFunction,
    lower: bool,
) -> Vec<Q> {
    let ranges_in = block_ranges(&inner.composition);
    outer
        .elems
        .iter()
        .map(|&y| {
            let m = &g.mats[y];
            if !is_block_triangular(m, g.n, &ranges_in, lower) {
                return Q::zero();
            }
            let mpart = g.index_of(&block_diag_part(m, g.n, &ranges_in));
            f.values[inner.class_of[&mpart]]
        })
        .collect()
}

/// Parabolic induction from the inner Levi to the outer one:
/// ind(f)(y) = |P|^{-1} Σ_{x∈outer} f[P](x^{-1} y x). With `lower`, the
/// opposite parabolic is used; the result must not depend on this choice.
pub fn ind_parabolic(
    g: &GroupTable,
    outer: &LeviGroup,
    inner: &LeviGroup,
    f: &ClassFunction,
    lower: bool,
) -> ClassFunction {
    let fp = extend_by_zero(g, outer, inner, f, lower);
    let pos: HashMap<usize, usize> =
        outer.elems.iter().enumerate().map(|(p, &e)| (e, p)).collect();
    let u = rel_unipotent(g, outer, inner, lower);
    let p_order = qi((inner.elems.len() * u.len()) as i64);
    let values = outer
        .class_reps
        .iter()
        .map(|&y| {
            let s: Q = outer
                .elems
                .iter()
                .map(|&x| fp[pos[&g.mul(g.mul(g.inv[x], y), x)]])
                .sum();
            s / p_order
        })
        .collect();
    ClassFunction { values }
}

/// Representatives of the conjugacy classes of Levi subgroups of the outer
/// Levi: one composition per choice of a partition of each block. With
/// `proper`, the outer Levi itself is excluded.
pub fn levi_class_reps(outer_comp: &[usize], proper: bool) -> Vec<Vec<usize>> {
    let per_block: Vec<Vec<Vec<usize>>> =
        outer_comp.iter().map(|&b| partitions(b)).collect();
    per_block
        .iter()
        .map(|ps| ps.iter())
        .multi_cartesian_product()
        .map(|choice| choice.into_iter().flatten().copied().collect::<Vec<usize>>())
        .filter(|comp| !proper || comp != outer_comp)
        .collect()
}

/// Partitions of n as descending compositions.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=n.min(max)).rev() {
            cur.push(k);
            rec(n - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// All ordered compositions of n.
pub fn compositions(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for k in 1..=n {
            cur.push(k);
            rec(n - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::new(), &mut out);
    out
}

/// n^outer(inner) = |Norm_outer(inner Levi)| / |inner Levi|, where the
/// normalizer is that of the algebraic Levi: x normalizes the block-diagonal
/// Levi iff conjugation by x preserves its matrix-algebra span (tested on
/// matrix units). Over small fields this differs from the set stabilizer of
/// the finite point group, which is why the span criterion is used.
pub fn n_norm(g: &GroupTable, outer: &LeviGroup, inner: &LeviGroup) -> u64 {
    let ranges = block_ranges(&inner.composition);
    let mut units = Vec::new();
    for &(a, b) in &ranges {
        for i in a..b {
            for j in a..b {
                let mut e = vec![0u8; g.n * g.n];
                e[i * g.n + j] = 1;
                units.push(e);
            }
        }
    }
    let count = outer
        .elems
        .iter()
        .filter(|&&x| {
            let xm = &g.mats[x];
            let xi = &g.mats[g.inv[x]];
            units.iter().all(|e| {
                let c = mat_mul_modq(&mat_mul_modq(xm, e, g.n, g.q), xi, g.n, g.q);
                is_block_diagonal(&c, g.n, &ranges)
            })
        })
        .count();
    (count / inner.elems.len()) as u64
}

/// Is f cuspidal on the outer Levi: restriction to every proper Levi class
/// representative vanishes identically?
pub fn is_cuspidal(g: &GroupTable, outer: &LeviGroup, f: &ClassFunction) -> bool {
    levi_class_reps(&outer.composition, true)
        .iter()
        .all(|comp| res_parabolic(g, outer, &levi_group(g, comp), f).is_zero())
}

/// Cuspidal projection on the outer Levi, computed recursively through the
/// decomposition identity: proj(f) = f − Σ_{proper M} n(M)^{-1} ind(proj_M(res_M f)).
pub fn proj_cusp(g: &GroupTable, outer: &LeviGroup, f: &ClassFunction) -> ClassFunction {
    let mut result = f.clone();
    for comp in levi_class_reps(&outer.composition, true) {
        let m = levi_group(g, &comp);
        let fm = res_parabolic(g, outer, &m, f);
        let pm = proj_cusp(g, &m, &fm);
        let coeff = qi(n_norm(g, outer, &m) as i64).recip();
        result = result.sub(&ind_parabolic(g, outer, &m, &pm, false).scale(coeff));
    }
    result
}

/// Report of the exact decomposition-identity checks for one function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// f − Σ_M n(M)^{-1} ind(proj_cusp_M(f)) over Levi class representatives.
    pub identity1_ok: bool,
    /// The restriction analogue, per proper standard Levi (by composition).
    pub identity2_ok: Vec<(Vec<usize>, bool)>,
    /// The all-parabolics form with coefficients z(P) = 1/k! per composition
    /// with k blocks (these satisfy the conjugation-invariance and
    /// sum-to-one conditions).
    pub identity5_ok: bool,
}

impl DecompositionReport {
    pub fn all_ok(&self) -> bool {
        self.identity1_ok && self.identity5_ok && self.identity2_ok.iter().all(|(_, b)| *b)
    }
}

/// Check identities (full decomposition, its restriction to each Levi, and
/// the parabolic-sum form) exactly for one class function on the full group.
pub fn verify_decomposition(g: &GroupTable, f: &ClassFunction) -> DecompositionReport {
    let full = levi_group(g, &[g.n]);
    // Full decomposition over Levi class representatives.
    let mut rhs1 = ClassFunction::zero(full.classes.len());
    for comp in levi_class_reps(&[g.n], false) {
        let m = levi_group(g, &comp);
        let fm = res_parabolic(g, &full, &m, f);
        let pm = proj_cusp(g, &m, &fm);
        let coeff = qi(n_norm(g, &full, &m) as i64).recip();
        rhs1 = rhs1.add(&ind_parabolic(g, &full, &m, &pm, false).scale(coeff));
    }
    let identity1_ok = rhs1 == *f;

    // Restriction form for each proper standard Levi L.
    let mut identity2_ok = Vec::new();
    for lcomp in levi_class_reps(&[g.n], true) {
        let l = levi_group(g, &lcomp);
        let fl = res_parabolic(g, &full, &l, f);
        let mut rhs = ClassFunction::zero(l.classes.len());
        for mcomp in levi_class_reps(&lcomp, false) {
            let m = levi_group(g, &mcomp);
            let fm = res_parabolic(g, &l, &m, &fl);
            let pm = proj_cusp(g, &m, &fm);
            let coeff = qi(n_norm(g, &l, &m) as i64).recip();
            rhs = rhs.add(&ind_parabolic(g, &l, &m, &pm, false).scale(coeff));
        }
        identity2_ok.push((lcomp, rhs == fl));
    }

    // All-parabolics form: conjugacy classes of parabolics correspond to
    // ordered compositions; the class of the one with composition c
    // contributes z_c · ind through its standard member, with z_c = 1/k!
    // (each Levi with k blocks lies in exactly k! parabolics, so the z
    // system sums to 1 on every P(M)).
    let mut rhs5 = ClassFunction::zero(full.classes.len());
    for comp in compositions(g.n) {
        let k = comp.len();
        let z = qi((1..=k as i64).product::<i64>()).recip();
        let m = levi_group(g, &comp);
        let fm = res_parabolic(g, &full, &m, f);
        let pm = proj_cusp(g, &m, &fm);
        rhs5 = rhs5.add(&ind_parabolic(g, &full, &m, &pm, false).scale(z));
    }
    let identity5_ok = rhs5 == *f;

    DecompositionReport { identity1_ok, identity2_ok, identity5_ok }
}

// ---------------------------------------------------------------------------
// Twisted tori
// ---------------------------------------------------------------------------

/// The split torus (F_q^×)^n twisted by a coordinate permutation θ. The
/// twisted space is the coset T·θ; its classes are the orbits of
/// x ↦ g·x·θ(g)^{-1}. Since a torus has no proper parabolic, the whole
/// function calculus is trivial on it: everything is cuspidal.
#[derive(Clone, Debug)]
pub struct TwistedSpace {
    pub n: usize,
    pub q: u32,
    /// θ acts by θ(g)_i = g_{perm[i]}.
    pub perm: Vec<usize>,
    /// Tuples of units in 1..q, in lexicographic order.
    pub elements: Vec<Vec<u8>>,
    pub class_of: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    pub class_reps: Vec<usize>,
}

pub fn build_twisted_torus(n: usize, q: u32, perm: &[usize]) -> Result<TwistedSpace, Error> {
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if n == 0 || n > 4 {
        return Err(Error::Precondition(format!(
            "build_twisted_torus: n = {n} out of range 1..=4"
        )));
    }
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidInput(format!("not a permutation of 0..{n}: {perm:?}")));
    }
    let units: Vec<u8> = (1..q as u8).collect();
    let elements: Vec<Vec<u8>> = std::iter::repeat_n(units.iter().copied(), n)
        .multi_cartesian_product()
        .collect();
    let index: HashMap<Vec<u8>, usize> =
        elements.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
    let qq = q as u64;
    let twist = |g: &[u8], x: &[u8]| -> Vec<u8> {
        // (g · x · θ(g)^{-1})_i = g_i x_i g_{perm[i]}^{-1} in F_q^×
        (0..n)
            .map(|i| {
                let ginv = pow_mod(g[perm[i]] as u64, q - 2, qq);
                (g[i] as u64 * x[i] as u64 % qq * ginv % qq) as u8
            })
            .collect()
    };
    let mut class_of = vec![usize::MAX; elements.len()];
    let mut classes = Vec::new();
    let mut reps = Vec::new();
    for e in 0..elements.len() {
        if class_of[e] != usize::MAX {
            continue;
        }
        let cid = classes.len();
        let mut members = Vec::new();
        for g in &elements {
            let y = index[&twist(g, &elements[e])];
            if class_of[y] == usize::MAX {
                class_of[y] = cid;
                members.push(y);
            }
        }
        members.sort_unstable();
        classes.push(members);
        reps.push(e);
    }
    Ok(TwistedSpace { n, q, perm: perm.to_vec(), elements, class_of, classes, class_reps: reps })
}

impl TwistedSpace {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
    /// A torus has no proper parabolic, so every invariant function is
    /// cuspidal and the decomposition identities degenerate to f = f.
    pub fn is_cuspidal(&self, _f: &ClassFunction) -> bool {
        true
    }
    pub fn proj_cusp(&self, f: &ClassFunction) -> ClassFunction {
        f.clone()
    }
    pub fn verify_decomposition(&self, f: &ClassFunction) -> bool {
        self.proj_cusp(f) == *f
    }
}

// ---------------------------------------------------------------------------
// Reductive quotients of facets (type-A apartments)
// ---------------------------------------------------------------------------

/// The composition of n read off a facet of a type-A apartment of rank n−1:
/// the roots constant at integer values on the facet form a product of
/// type-A factors; a factor with k(k+1)/2 positive roots contributes a part
/// of k+1, and the composition is padded with 1s up to n (descending order).
pub fn facet_composition(rs: &RootSystem, f: &Facet) -> Result<Vec<usize>, Error> {
    if rs.cartan_type.factors.len() != 1
        || !matches!(rs.cartan_type.factors[0], SimpleType::A1 | SimpleType::A2 | SimpleType::A3)
    {
        return Err(Error::UnsupportedType(format!(
            "facet_composition requires a single type-A factor, got {}",
            rs.cartan_type
        )));
    }
    let n = rs.rank + 1;
    let eq = eq_roots(rs, f);
    // Split the constant positive roots into irreducible factors by
    // non-orthogonality.
    let mut remaining: Vec<usize> = eq;
    let mut parts = Vec::new();
    while let Some(seed) = remaining.pop() {
        let mut comp = vec![seed];
        loop {
            let mut grew = false;
            remaining.retain(|&r| {
                if comp.iter().any(|&c| !rs.inner(&rs.roots[c], &rs.roots[r]).is_zero()) {
                    comp.push(r);
                    grew = true;
                    false
                } else {
                    true
                }
            });
            if !grew {
                break;
            }
        }
        // k positive roots in type A_m means m(m+1)/2 = k.
        let k = comp.len();
        let m = (1..).find(|&m| m * (m + 1) / 2 == k).ok_or_else(|| {
            Error::InvalidInput(format!("constant-root factor of size {k} is not of type A"))
        })?;
        parts.push(m + 1);
    }
    let used: usize = parts.iter().sum();
    parts.extend(std::iter::repeat_n(1, n - used));
    parts.sort_unstable_by(|a, b| b.cmp(a));
    Ok(parts)
}

/// The finite reductive quotient attached to a facet: the block Levi
/// Π GL_{n_i}(F_q) inside GL_n(F_q) with the facet's composition.
pub fn reductive_quotient(
    rs: &RootSystem,
    f: &Facet,
    q: u32,
) -> Result<(GroupTable, LeviGroup), Error> {
    let comp = facet_composition(rs, f)?;
    let g = build_gl(rs.rank + 1, q)?;
    let levi = levi_group(&g, &comp);
    Ok((g, levi))
}
