//! Chamber cones, solid-angle coefficients, and the truncated cancellation
//! sums: z(F1, F, σ) for a facet pair with a twist, the signed closure sum
//! z_R, the stratified sum z_{N,R}, the dichotomy verification for the
//! latter, and the Euler-characteristic/convexity probe behind it.
//!
//! Solid angles are exact rationals in dimension ≤ 2 (sector counting with
//! the invariant metric) and seeded Monte-Carlo estimates in dimension 3.

use crate::apartment::{
    build_br, closure_contains, closure_facets, enumerate_facets, facet_in_region,
    fixed_dim, fixed_direction_basis, levi_of_twisted_facet, levi_positive, mfacet_constraints,
    mfixed_constraints, parabolic_of_pair, parabolic_subsets_of, project_facet, stabilizes,
    stabilizes_mfacet, system_dim, ApartmentAutomorphism, Facet, FacetEntry, MFacet,
};
use crate::exact::{add, dot, kernel, qi, rank as mat_rank, rref, scale, solve, zeros, Q, QVec};
use crate::lp::{feasible_point, is_feasible, Con};
use crate::rootsys::{LeviSubset, ParabolicSubset, RootSystem};
use crate::Error;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Fixed seed for every Monte-Carlo estimate in this module.
pub const MC_SEED: u64 = 0xC0FFEE;
/// Samples per Monte-Carlo solid-angle estimate.
pub const MC_SAMPLES: u64 = 2_000_000;

/// An open polyhedral cone inside a linear subspace of the apartment:
/// the subspace is spanned by `basis`, and the cone is cut out by the strict
/// inequalities cov · x > 0 for the stored ambient covectors.
#[derive(Clone, Debug)]
pub struct ChamberCone {
    pub basis: Vec<QVec>,
    pub covs: Vec<QVec>,
}

/// The fraction of the subspace's unit ball occupied by a cone.
#[derive(Clone, Debug, Serialize)]
pub enum SolidAngle {
    Exact(Q),
    Estimate { value: f64, half_width: f64, seed: u64, samples: u64 },
}

impl SolidAngle {
    pub fn approx(&self) -> f64 {
        match self {
            SolidAngle::Exact(v) => v.to_f64().unwrap(),
            SolidAngle::Estimate { value, .. } => *value,
        }
    }
    pub fn exact(&self) -> Option<Q> {
        match self {
            SolidAngle::Exact(v) => Some(*v),
            SolidAngle::Estimate { .. } => None,
        }
    }
}

/// A sum of signed solid angles: exact while every term is exact, with a
/// float shadow and accumulated half-width either way.
#[derive(Clone, Debug, Serialize)]
pub struct ZSum {
    pub exact: Option<Q>,
    pub value: f64,
    pub half_width: f64,
}

impl ZSum {
    pub fn zero() -> Self {
        ZSum { exact: Some(Q::zero()), value: 0.0, half_width: 0.0 }
    }
    pub fn add_term(&mut self, sign: i64, term: &SolidAngle) {
        match term {
            SolidAngle::Exact(v) => {
                if let Some(e) = &mut self.exact {
                    *e += qi(sign) * v;
                }
                self.value += sign as f64 * v.to_f64().unwrap();
            }
            SolidAngle::Estimate { value, half_width, .. } => {
                self.exact = None;
                self.value += sign as f64 * value;
                self.half_width += half_width;
            }
        }
    }
    pub fn add_sum(&mut self, other: &ZSum) {
        match (&mut self.exact, &other.exact) {
            (Some(a), Some(b)) => {
                *a += b;
            }
            _ => self.exact = None,
        }
        self.value += other.value;
        self.half_width += other.half_width;
    }
    /// Exact equality against a rational when exact, tolerance otherwise.
    pub fn matches(&self, target: &SolidAngle, tol: f64) -> bool {
        match (&self.exact, target) {
            (Some(e), SolidAngle::Exact(t)) => e == t,
            _ => (self.value - target.approx()).abs() <= tol + self.half_width,
        }
    }
}

fn fnv64(data: impl IntoIterator<Item = i64>) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for v in data {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

fn cone_stream(cone: &ChamberCone) -> u64 {
    let ser = cone
        .basis
        .iter()
        .chain(cone.covs.iter())
        .flat_map(|v| v.iter().flat_map(|x| [*x.numer(), *x.denom()]))
        .collect::<Vec<i64>>();
    MC_SEED ^ fnv64(ser)
}

/// Restrict an ambient covector to subspace coordinates.
fn restrict(cov: &[Q], basis: &[QVec]) -> QVec {
    basis.iter().map(|b| dot(cov, b)).collect()
}

/// The fraction of the unit ball of the cone's subspace (under the
/// W-invariant metric of the root system) lying inside the cone. Exact for
/// subspace dimension ≤ 2, Monte-Carlo for dimension 3.
pub fn ball_fraction(rs: &RootSystem, cone: &ChamberCone) -> SolidAngle {
    let d = cone.basis.len();
    let ineqs: Vec<QVec> = cone.covs.iter().map(|c| restrict(c, &cone.basis)).collect();
    // A strict inequality whose functional dies on the subspace empties the
    // cone outright.
    if ineqs.iter().any(|f| f.iter().all(Q::is_zero)) {
        return SolidAngle::Exact(Q::zero());
    }
    match d {
        0 => SolidAngle::Exact(qi(1)),
        1 => {
            let signs: Vec<bool> = ineqs.iter().map(|f| f[0].is_positive()).collect();
            if signs.is_empty() {
                SolidAngle::Exact(qi(1))
            } else if signs.iter().all(|&s| s == signs[0]) {
                SolidAngle::Exact(crate::exact::q(1, 2))
            } else {
                SolidAngle::Exact(Q::zero())
            }
        }
        2 => ball_fraction_2d(rs, cone, &ineqs),
        3 => ball_fraction_mc(rs, cone),
        _ => unreachable!("subspace dimension above 3 is outside the supported ranks"),
    }
}

/// Exact planar solid angle by sector counting: the restrictions of all
/// roots cut the plane into sectors; when all sectors are congruent under
/// the invariant metric, the fraction is (#sectors inside)/(#sectors).
fn ball_fraction_2d(rs: &RootSystem, cone: &ChamberCone, ineqs: &[QVec]) -> SolidAngle {
    if ineqs.is_empty() {
        return SolidAngle::Exact(qi(1));
    }
    // Distinct lines: restricted root functionals up to scaling.
    let mut lines: Vec<QVec> = Vec::new();
    let mut fs: Vec<QVec> = rs
        .positive
        .iter()
        .map(|&i| restrict(&rs.covectors[i], &cone.basis))
        .collect();
    fs.extend(ineqs.iter().cloned());
    for f in fs {
        if f.iter().all(Q::is_zero) {
            continue;
        }
        let parallel = |a: &QVec, b: &QVec| (a[0] * b[1] - a[1] * b[0]).is_zero();
        if !lines.iter().any(|l| parallel(l, &f)) {
            lines.push(f);
        }
    }
    if lines.len() == 1 {
        // All constraints parallel: a half-plane or empty.
        let f0 = &lines[0];
        let mut pos = false;
        let mut neg = false;
        for f in ineqs {
            let c = f0[0] * f[0] + f0[1] * f[1]; // sign of alignment with f0
            if c.is_positive() {
                pos = true;
            } else {
                neg = true;
            }
        }
        return SolidAngle::Exact(if pos && neg { Q::zero() } else { crate::exact::q(1, 2) });
    }
    // Boundary rays: both kernel directions of each line.
    let mut rays: Vec<QVec> = Vec::new();
    for l in &lines {
        let k = vec![-l[1], l[0]];
        rays.push(k.clone());
        rays.push(vec![-k[0], -k[1]]);
    }
    // Sort by angle with an exact comparator.
    let half = |v: &QVec| -> u8 {
        if v[1].is_positive() || (v[1].is_zero() && v[0].is_positive()) {
            0
        } else {
            1
        }
    };
    rays.sort_by(|a, b| {
        half(a).cmp(&half(b)).then_with(|| {
            // a before b when the rotation from a to b is counterclockwise
            let cross = a[0] * b[1] - a[1] * b[0];
            Q::zero().cmp(&cross)
        })
    });
    // Invariant metric on subspace coordinates.
    let gs: Vec<QVec> = cone
        .basis
        .iter()
        .map(|u| cone.basis.iter().map(|v| rs.inner(u, v)).collect())
        .collect();
    let ip = |u: &QVec, v: &QVec| -> Q {
        (0..2).map(|i| (0..2).map(|j| u[i] * gs[i][j] * v[j]).sum::<Q>()).sum()
    };
    // Congruence of sectors: equal cosines, compared by sign and square.
    let m = rays.len();
    let sector_cos = |i: usize| -> (i8, Q) {
        let (u, v) = (&rays[i], &rays[(i + 1) % m]);
        let c = ip(u, v);
        let s = if c.is_positive() {
            1
        } else if c.is_zero() {
            0
        } else {
            -1
        };
        (s, c * c / (ip(u, u) * ip(v, v)))
    };
    let first = sector_cos(0);
    if (1..m).any(|i| sector_cos(i) != first) {
        // Irregular sector pattern: fall back to a float angle computation
        // (well below the 1e-12 reporting threshold in double precision).
        return irregular_angle_2d(&gs, &rays, ineqs);
    }
    let inside = (0..m)
        .filter(|&i| {
            let w = add(&rays[i], &rays[(i + 1) % m]);
            ineqs.iter().all(|f| (f[0] * w[0] + f[1] * w[1]).is_positive())
        })
        .count();
    SolidAngle::Exact(Q::new(inside as i64, m as i64))
}

/// Fallback planar angle: sum the angular measure of the sectors inside the
/// cone in double precision.
fn irregular_angle_2d(gs: &[QVec], rays: &[QVec], ineqs: &[QVec]) -> SolidAngle {
    let ipf = |u: &[f64; 2], v: &[f64; 2]| -> f64 {
        let g: Vec<Vec<f64>> =
            gs.iter().map(|r| r.iter().map(|x| x.to_f64().unwrap()).collect()).collect();
        u[0] * g[0][0] * v[0] + u[0] * g[0][1] * v[1] + u[1] * g[1][0] * v[0] + u[1] * g[1][1] * v[1]
    };
    let m = rays.len();
    let mut total = 0.0f64;
    for i in 0..m {
        let (u, v) = (&rays[i], &rays[(i + 1) % m]);
        let w = add(u, v);
        if !ineqs.iter().all(|f| (f[0] * w[0] + f[1] * w[1]).is_positive()) {
            continue;
        }
        let uf = [u[0].to_f64().unwrap(), u[1].to_f64().unwrap()];
        let vf = [v[0].to_f64().unwrap(), v[1].to_f64().unwrap()];
        let c = ipf(&uf, &vf) / (ipf(&uf, &uf).sqrt() * ipf(&vf, &vf).sqrt());
        total += c.clamp(-1.0, 1.0).acos();
    }
    SolidAngle::Estimate {
        value: total / (2.0 * std::f64::consts::PI),
        half_width: 1e-12,
        seed: 0,
        samples: 0,
    }
}

/// Monte-Carlo solid angle for a 3-dimensional subspace: uniform directions
/// under the invariant metric, a fixed master seed, and a per-cone
/// deterministic substream. The half-width is the 99% Hoeffding bound.
fn ball_fraction_mc(rs: &RootSystem, cone: &ChamberCone) -> SolidAngle {
    // Gram-Schmidt the basis into invariant-orthonormal vectors (floats).
    let bf: Vec<Vec<f64>> = cone
        .basis
        .iter()
        .map(|b| b.iter().map(|x| x.to_f64().unwrap()).collect())
        .collect();
    let gram: Vec<Vec<f64>> = rs
        .gram
        .iter()
        .map(|r| r.iter().map(|x| x.to_f64().unwrap()).collect())
        .collect();
    let ipf = |u: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                s += ui * gram[i][j] * vj;
            }
        }
        s
    };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for b in &bf {
        let mut v = b.clone();
        for e in &basis {
            let c = ipf(&v, e);
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= c * ei;
            }
        }
        let norm = ipf(&v, &v).sqrt();
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    // Cone inequalities as functionals of the orthonormal coordinates.
    let covf: Vec<Vec<f64>> = cone
        .covs
        .iter()
        .map(|c| {
            let cf: Vec<f64> = c.iter().map(|x| x.to_f64().unwrap()).collect();
            basis
                .iter()
                .map(|e| cf.iter().zip(e).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let seed = cone_stream(cone);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    let mut done = 0u64;
    while done < MC_SAMPLES {
        let g: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        if n2 > 1.0 || n2 < 1e-12 {
            continue;
        }
        done += 1;
        if covf.iter().all(|c| c[0] * g[0] + c[1] * g[1] + c[2] * g[2] > 0.0) {
            hits += 1;
        }
    }
    let value = hits as f64 / MC_SAMPLES as f64;
    let half_width = ((2.0f64 / 0.01).ln() / (2.0 * MC_SAMPLES as f64)).sqrt();
    SolidAngle::Estimate { value, half_width, seed, samples: MC_SAMPLES }
}

/// The open chamber attached to a facet pair and twist: inside the σ-fixed
/// directions of the bigger facet F, the cone of directions leading from the
/// closure facet F1 into F (the roots constant on F1 but growing toward F
/// must increase).
pub fn cone_of_triple(
    rs: &RootSystem,
    sigma: &ApartmentAutomorphism,
    f1: &Facet,
    f: &Facet,
) -> Result<ChamberCone, Error> {
    if !closure_contains(f, f1) {
        return Err(Error::Precondition(
            "cone_of_triple: the first facet must lie in the closure of the second".into(),
        ));
    }
    if !stabilizes(rs, sigma, f1) || !stabilizes(rs, sigma, f) {
        return Err(Error::Precondition(
            "cone_of_triple: the automorphism must stabilize both facets".into(),
        ));
    }
    let basis = fixed_direction_basis(rs, sigma, f);
    let p = parabolic_of_pair(rs, f1, f)?;
    let covs = p.positive_part.iter().map(|&i| rs.covectors[i].clone()).collect();
    Ok(ChamberCone { basis, covs })
}

/// z(F1, F, σ): the solid angle of the chamber of the triple.
pub fn z_triple(
    rs: &RootSystem,
    sigma: &ApartmentAutomorphism,
    f1: &Facet,
    f: &Facet,
) -> Result<SolidAngle, Error> {
    Ok(ball_fraction(rs, &cone_of_triple(rs, sigma, f1, f)?))
}

/// All facets having `f` in their closure (the open star of `f`).
pub fn cofacets(rs: &RootSystem, f: &Facet) -> Vec<Facet> {
    let mut out = Vec::new();
    let mut entries = f.entries.clone();
    fn rec(
        rs: &RootSystem,
        orig: &[FacetEntry],
        entries: &mut Vec<FacetEntry>,
        depth: usize,
        out: &mut Vec<Facet>,
    ) {
        if depth == orig.len() {
            let cand = Facet { entries: entries.clone() };
            if crate::apartment::is_realizable(rs, &cand) {
                out.push(cand);
            }
            return;
        }
        match orig[depth] {
            FacetEntry::Open(c) => {
                entries[depth] = FacetEntry::Open(c);
                rec(rs, orig, entries, depth + 1, out);
            }
            FacetEntry::Eq(c) => {
                for e in [FacetEntry::Eq(c), FacetEntry::Open(c), FacetEntry::Open(c - 1)] {
                    entries[depth] = e;
                    rec(rs, orig, entries, depth + 1, out);
                }
            }
        }
        entries[depth] = orig[depth];
    }
    rec(rs, &f.entries.clone(), &mut entries, 0, &mut out);
    out.sort();
    out
}

/// Canonical key for the σ-fixed direction space of a facet, for grouping
/// cofacets by subspace.
pub fn fixed_subspace_key(
    rs: &RootSystem,
    sigma: &ApartmentAutomorphism,
    f: &Facet,
) -> Vec<QVec> {
    rref(&fixed_direction_basis(rs, sigma, f))
}

/// z_R(F, σ): the signed sum over the σ-stable closure facets of F inside
/// the region of (−1)^{dim F1^ν} z(F1, F, σ).
pub fn z_r(
    rs: &RootSystem,
    sigma: &ApartmentAutomorphism,
    f: &Facet,
    region: &[Con],
) -> Result<ZSum, Error> {
    let mut sum = ZSum::zero();
    for f1 in closure_facets(rs, f) {
        if !stabilizes(rs, sigma, &f1) || !facet_in_region(rs, &f1, region) {
            continue;
        }
        let sign = if fixed_dim(rs, sigma, &f1) % 2 == 0 { 1 } else { -1 };
        sum.add_term(sign, &z_triple(rs, sigma, &f1, f)?);
    }
    Ok(sum)
}

/// A reusable enumeration window: the ball region B_R and the complete facet
/// list of the slightly larger ball B_{R+2}. The margin of 2 makes the list
/// provably cover every facet whose closure meets B_R (root values spread by
/// at most 1 across a facet and one more across its closure).
pub struct Window {
    pub r: i64,
    pub br: Vec<Con>,
    pub facets: Vec<Facet>,
}

pub fn build_window(rs: &RootSystem, f_star: &Facet, r: i64) -> Result<Window, Error> {
    let br = build_br(rs, f_star, r);
    let facets = enumerate_facets(rs, &build_br(rs, f_star, r + 2))?;
    Ok(Window { r, br, facets })
}

/// Is the quotient facet entirely inside the core stratum X^M_N(M) of the
/// M-apartment (no proper parabolic of Σ^M has all its unipotent-part root
/// values above N there)?
pub fn mfacet_in_xmn(rs: &RootSystem, m: &LeviSubset, fm: &MFacet, n: i64) -> bool {
    let Some(x) = feasible_point(rs.rank, &mfacet_constraints(rs, fm, false)) else {
        return false;
    };
    let level = qi(n);
    let pars = parabolic_subsets_of(rs, &levi_positive(rs, m));
    let cands: Vec<&ParabolicSubset> = pars
        .iter()
        .filter(|p| p.positive_part.iter().all(|&i| rs.eval(i, &x) > level))
        .collect();
    cands
        .iter()
        .min_by_key(|p| p.roots().len())
        .is_some_and(|p| p.positive_part.is_empty())
}

/// Is the σ-fixed part of the quotient facet a single point of the
/// M-apartment (its apartment preimage has exactly the dimension of 𝒜_M)?
pub fn mfixed_is_point(
    rs: &RootSystem,
    sigma: &ApartmentAutomorphism,
    m: &LeviSubset,
    fm: &MFacet,
) -> bool {
    let am_dim = rs.rank
        - mat_rank(
            &levi_positive(rs, m)
                .into_iter()
                .map(|i| rs.covectors[i].clone())
                .collect::<Vec<QVec>>(),
        );
    system_dim(rs.rank, &mfixed_constraints(rs, sigma, fm, false)) == Some(am_dim)
}

/// z_{N,R}(P, F_M, σ): the sum of z_R over the facets of the stratum-and-
/// projection family Y_N(P, F_M, σ) = {F ⊂ X_N(P) : σ(F) = F, M ⊇ M_{F,σ},
/// F^M = F_M}, enumerated inside the window.
pub fn z_nr(
    rs: &RootSystem,
    all_parabolics: &[ParabolicSubset],
    p: &ParabolicSubset,
    m: &LeviSubset,
    fm: &MFacet,
    sigma: &ApartmentAutomorphism,
    n: i64,
    window: &Window,
) -> Result<ZSum, Error> {
    if !stabilizes_mfacet(rs, sigma, m, fm) {
        return Err(Error::Precondition(
            "z_nr: the automorphism must be an M-twist stabilizing the quotient facet".into(),
        ));
    }
    if !sigma.is_g_compact(rs.rank) {
        return Err(Error::Precondition("z_nr: the automorphism must have a fixed point".into()));
    }
    let mut sum = ZSum::zero();
    for f in &window.facets {
        if project_facet(rs, f, m) != *fm
            || !stabilizes(rs, sigma, f)
            || !m.contains(&levi_of_twisted_facet(rs, sigma, f))
            || !crate::apartment::facet_in_xn(rs, f, n, p, all_parabolics)
        {
            continue;
        }
        sum.add_sum(&z_r(rs, sigma, f, &window.br)?);
    }
    Ok(sum)
}

/// The predicted value of the dichotomy: the solid angle in 𝒜_M of the
/// chamber cut by the unipotent part of P.
pub fn dichotomy_predicted_chamber(rs: &RootSystem, p: &ParabolicSubset, m: &LeviSubset) -> SolidAngle {
    let cov_rows: Vec<QVec> = levi_positive(rs, m)
        .into_iter()
        .map(|i| rs.covectors[i].clone())
        .collect();
    let basis = kernel(&cov_rows, rs.rank);
    let covs = p.positive_part.iter().map(|&i| rs.covectors[i].clone()).collect();
    ball_fraction(rs, &ChamberCone { basis, covs })
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub in_xmn: bool,
    pub fixed_is_point: bool,
    pub predicted: SolidAngle,
    pub computed: ZSum,
    pub computed_guard: ZSum,
    pub matched: bool,
    pub stable: bool,
}

/// Verify the dichotomy: z_{N,R} equals the chamber fraction when the
/// quotient facet sits in the core stratum and its fixed set is a point, and
/// equals zero otherwise. A second run at R+5 guards against an
/// insufficiently large R.
pub fn dichotomy_verify(
    rs: &RootSystem,
    all_parabolics: &[ParabolicSubset],
    p: &ParabolicSubset,
    m: &LeviSubset,
    fm: &MFacet,
    sigma: &ApartmentAutomorphism,
    n: i64,
    window: &Window,
    window_guard: &Window,
) -> Result<DichotomyReport, Error> {
    let in_xmn = mfacet_in_xmn(rs, m, fm, n);
    let fixed_is_point = mfixed_is_point(rs, sigma, m, fm);
    let predicted = if in_xmn && fixed_is_point {
        dichotomy_predicted_chamber(rs, p, m)
    } else {
        SolidAngle::Exact(Q::zero())
    };
    let computed = z_nr(rs, all_parabolics, p, m, fm, sigma, n, window)?;
    let computed_guard = z_nr(rs, all_parabolics, p, m, fm, sigma, n, window_guard)?;
    let tol = 5e-3;
    let matched = computed.matches(&predicted, tol);
    let stable = match (&computed.exact, &computed_guard.exact) {
        (Some(a), Some(b)) => a == b,
        _ => (computed.value - computed_guard.value).abs()
            <= tol + computed.half_width + computed_guard.half_width,
    };
    Ok(DichotomyReport { in_xmn, fixed_is_point, predicted, computed, computed_guard, matched, stable })
}

// ---------------------------------------------------------------------------
// Euler-characteristic / convexity probe
// ---------------------------------------------------------------------------

/// The σ-orbit-average vertices of the closure of the fixed part of the
/// quotient facet, as vectors of Σ^M root values (quotient coordinates).
pub fn quotient_fixed_vertices(
    rs: &RootSystem,
    sigma: &ApartmentAutomorphism,
    m: &LeviSubset,
    fm: &MFacet,
) -> Result<Vec<QVec>, Error> {
    if !stabilizes_mfacet(rs, sigma, m, fm) {
        return Err(Error::Precondition(
            "quotient_fixed_vertices: need an M-twist stabilizing the quotient facet".into(),
        ));
    }
    let pos = levi_positive(rs, m);
    let cov_rows: Vec<QVec> = pos.iter().map(|&i| rs.covectors[i].clone()).collect();
    // Vertices of the closure of F_M: integer value assignments at the
    // interval endpoints that are realizable as root-value vectors.
    let mut verts: Vec<QVec> = Vec::new();
    let k = fm.entries.len();
    let mut choice = vec![0usize; k];
    'outer: loop {
        let y: QVec = fm
            .entries
            .iter()
            .zip(&choice)
            .map(|(&(_, e), &c)| match e {
                FacetEntry::Eq(v) => qi(v),
                FacetEntry::Open(v) => qi(v + c as i64),
            })
            .collect();
        if solve(&cov_rows, &y, rs.rank).is_some() && !verts.contains(&y) {
            verts.push(y);
        }
        for i in 0..k {
            // Endpoint choices per entry: just c for Eq(c), c or c+1 for Open(c).
            let lim = match fm.entries[i].1 {
                FacetEntry::Eq(_) => 0,
                FacetEntry::Open(_) => 1,
            };
            if choice[i] < lim {
                choice[i] += 1;
                continue 'outer;
            }
            choice[i] = 0;
        }
        break;
    }
    if verts.is_empty() {
        return Err(Error::Precondition(
            "quotient facet closure has no integral vertices; unsupported configuration".into(),
        ));
    }
    // The descended σ acts affinely on the value vectors; orbit-average.
    let lt = crate::exact::transpose(&sigma.linear);
    let image = |y: &QVec| -> QVec {
        pos.iter()
            .map(|&b| {
                let img = crate::exact::mat_vec(&lt, &rs.covectors[b]);
                let shift = dot(&rs.covectors[b], &sigma.translation);
                // img = ± a covector of a Σ^M root
                for (bj, &b2) in pos.iter().enumerate() {
                    if rs.covectors[b2] == img {
                        return y[bj] + shift;
                    }
                    if scale(&rs.covectors[b2], qi(-1)) == img {
                        return -y[bj] + shift;
                    }
                }
                unreachable!("M-twist must permute the Σ^M functionals")
            })
            .collect()
    };
    let mut seen = vec![false; verts.len()];
    let mut averages = Vec::new();
    for s in 0..verts.len() {
        if seen[s] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut cur = verts[s].clone();
        loop {
            let idx = verts
                .iter()
                .position(|v| *v == cur)
                .expect("descended twist must permute the quotient vertices");
            if seen[idx] {
                break;
            }
            seen[idx] = true;
            orbit.push(verts[idx].clone());
            cur = image(&verts[idx]);
        }
        let mut avg = vec![Q::zero(); orbit[0].len()];
        for o in &orbit {
            avg = add(&avg, o);
        }
        averages.push(scale(&avg, qi(orbit.len() as i64).recip()));
    }
    averages.sort();
    Ok(averages)
}

/// Constraints (over joint variables x ∈ Q^rank and hull weights λ) placing
/// x in the truncation slab E[J, D]: the cylinder over the closed face of
/// the fixed quotient polysimplex spanned by the vertices outside J, within
/// the ball, with the roots of D pinned to level N and the remaining
/// spreading roots at least N.
fn euler_region_cons(
    rs: &RootSystem,
    m: &LeviSubset,
    verts: &[QVec],
    j: &[usize],
    dm_roots: &[usize],
    d: &[usize],
    n: i64,
    br: &[Con],
) -> Vec<Con> {
    let pos = levi_positive(rs, m);
    let keep: Vec<usize> = (0..verts.len()).filter(|i| !j.contains(i)).collect();
    let nv = keep.len();
    let nx = rs.rank;
    let pad = |a: &[Q], lam: &[Q]| -> QVec {
        let mut v = a.to_vec();
        v.extend_from_slice(lam);
        v
    };
    let mut cons: Vec<Con> = Vec::new();
    // λ_k ≥ 0 and Σ λ = 1.
    for k in 0..nv {
        let mut lam = zeros(nv);
        lam[k] = qi(1);
        cons.push(Con::ge(pad(&zeros(nx), &lam), Q::zero()));
    }
    cons.push(Con::eq(pad(&zeros(nx), &vec![qi(1); nv]), qi(1)));
    // cov_β · x = Σ_k λ_k verts[keep[k]][β] for every β in Σ^M.
    for (bi, &b) in pos.iter().enumerate() {
        let lam: QVec = keep.iter().map(|&ki| -verts[ki][bi]).collect();
        cons.push(Con::eq(pad(&rs.covectors[b], &lam), Q::zero()));
    }
    // Ball constraints on x.
    for c in br {
        cons.push(Con { a: pad(&c.a, &zeros(nv)), rel: c.rel, b: c.b });
    }
    // Level constraints on the spreading roots.
    for &a in dm_roots {
        let con = if d.contains(&a) {
            Con::eq(pad(&rs.covectors[a], &zeros(nv)), qi(n))
        } else {
            Con::ge(pad(&rs.covectors[a], &zeros(nv)), qi(n))
        };
        cons.push(con);
    }
    cons
}

fn point_in_euler_region(rs: &RootSystem, cons: &[Con], x: &[Q]) -> bool {
    // Substitute x and solve for feasible hull weights.
    let sub: Vec<Con> = cons
        .iter()
        .map(|c| {
            let xval = dot(&c.a[..rs.rank], x);
            Con { a: c.a[rs.rank..].to_vec(), rel: c.rel, b: c.b - xval }
        })
        .collect();
    is_feasible(sub[0].a.len(), &sub)
}

#[derive(Clone, Debug, Serialize)]
pub struct EulerReport {
    pub nonempty: bool,
    pub facet_count: usize,
    pub alternating_sum: i64,
    pub expected: i64,
    pub euler_ok: bool,
    pub convexity_ok: bool,
}

/// Enumerate the σ-stable facets whose fixed parts tile E[J, D], compute the
/// alternating sum Σ (−1)^{dim F^ν} (the Euler characteristic of the tiling,
/// 1 for a nonempty convex slab, 0 for an empty one), and spot-check the
/// convexity of the slab with seeded midpoint tests.
#[allow(clippy::too_many_arguments)]
pub fn euler_convexity_probe(
    rs: &RootSystem,
    sigma: &ApartmentAutomorphism,
    m: &LeviSubset,
    fm: &MFacet,
    j: &[usize],
    dm_roots: &[usize],
    d: &[usize],
    n: i64,
    window: &Window,
    midpoint_samples: usize,
) -> Result<EulerReport, Error> {
    let verts = quotient_fixed_vertices(rs, sigma, m, fm)?;
    if j.iter().any(|&i| i >= verts.len()) || d.iter().any(|&a| !dm_roots.contains(&a)) {
        return Err(Error::Precondition(
            "euler_convexity_probe: J must index the fixed vertices and D ⊂ the spreading roots"
                .into(),
        ));
    }
    if j.len() == verts.len() {
        // Excluding every vertex empties the face outright.
        return Ok(EulerReport {
            nonempty: false,
            facet_count: 0,
            alternating_sum: 0,
            expected: 0,
            euler_ok: true,
            convexity_ok: true,
        });
    }
    let cons = euler_region_cons(rs, m, &verts, j, dm_roots, d, n, &window.br);
    let nonempty = is_feasible(cons[0].a.len(), &cons);
    let mut alternating_sum = 0i64;
    let mut centers: Vec<QVec> = Vec::new();
    for f in &window.facets {
        if !stabilizes(rs, sigma, f) {
            continue;
        }
        let fx = crate::apartment::fixed_facet(rs, sigma, f)?;
        let mut center = zeros(rs.rank);
        for a in &fx.orbit_averages {
            center = add(&center, a);
        }
        center = scale(&center, qi(fx.orbit_averages.len() as i64).recip());
        if !point_in_euler_region(rs, &cons, &center) {
            continue;
        }
        alternating_sum += if fx.dim % 2 == 0 { 1 } else { -1 };
        centers.push(center);
    }
    let expected = if nonempty { 1 } else { 0 };
    // Convexity: midpoints of random member pairs stay inside.
    let mut convexity_ok = true;
    if centers.len() >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(MC_SEED ^ 0x45554c45);
        for _ in 0..midpoint_samples {
            let a = &centers[rng.gen_range(0..centers.len())];
            let b = &centers[rng.gen_range(0..centers.len())];
            let mid = scale(&add(a, b), crate::exact::q(1, 2));
            if !point_in_euler_region(rs, &cons, &mid) {
                convexity_ok = false;
                break;
            }
        }
    }
    Ok(EulerReport {
        nonempty,
        facet_count: centers.len(),
        alternating_sum,
        expected,
        euler_ok: alternating_sum == expected,
        convexity_ok,
    })
}

/// A generic rational point of the open chamber of the parabolic subset Q:
/// all unipotent-part roots positive and no root outside the Levi vanishing.
/// Rejection-sampled with a fixed seed.
pub fn rho_q(rs: &RootSystem, q: &ParabolicSubset, seed: u64) -> QVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x: QVec = (0..rs.rank)
            .map(|_| Q::new(rng.gen_range(-1000i64..=1000), 101))
            .collect();
        let in_chamber = q
            .positive_part
            .iter()
            .all(|&i| rs.eval(i, &x).is_positive());
        let generic = (0..rs.num_positive()).all(|i| {
            q.levi.roots.contains(&i) || !rs.eval(i, &x).is_zero()
        });
        if in_chamber && generic {
            return x;
        }
    }
}

// ---------------------------------------------------------------------------
// Battery drivers shared by the verification suites
// ---------------------------------------------------------------------------

/// Distinct quotient facets obtained by projecting the closure facets of the
/// base alcove to the M-apartment.
pub fn mfacet_battery(rs: &RootSystem, m: &LeviSubset) -> Vec<MFacet> {
    let alcove = crate::apartment::fundamental_alcove(rs);
    let mut out: Vec<MFacet> = Vec::new();
    for f in closure_facets(rs, &alcove) {
        let fm = project_facet(rs, &f, m);
        if !out.contains(&fm) {
            out.push(fm);
        }
    }
    out.sort();
    out
}

/// One verified dichotomy instance.
#[derive(Clone, Debug, Serialize)]
pub struct DichotomyCase {
    pub label: String,
    pub levi_roots: Vec<usize>,
    pub parabolic_positive: Vec<usize>,
    pub mfacet: MFacet,
    pub report: DichotomyReport,
}

impl DichotomyCase {
    pub fn ok(&self) -> bool {
        self.report.matched && self.report.stable
    }
}

/// Run the truncated-sum dichotomy across the full battery: every Levi M,
/// every parabolic with that Levi, every quotient facet from the base-alcove
/// battery, and every compatible fixed-point automorphism from the generated
/// battery.
pub fn run_dichotomy(rs: &RootSystem, n: i64, r: i64) -> Result<Vec<DichotomyCase>, Error> {
    let alcove = crate::apartment::fundamental_alcove(rs);
    let window = build_window(rs, &alcove, r)?;
    let window_guard = build_window(rs, &alcove, r + 5)?;
    let all = crate::apartment::all_parabolic_subsets(rs);
    let battery = crate::apartment::automorphism_battery(rs);
    let mut out = Vec::new();
    for m in crate::rootsys::levi_lattice(rs) {
        let parabolics = crate::rootsys::parabolics_with_levi(rs, &m);
        for fm in mfacet_battery(rs, &m) {
            for (si, sigma) in battery.iter().enumerate() {
                if !stabilizes_mfacet(rs, sigma, &m, &fm) || !sigma.is_g_compact(rs.rank) {
                    continue;
                }
                for p in &parabolics {
                    let report = dichotomy_verify(
                        rs, &all, p, &m, &fm, sigma, n, &window, &window_guard,
                    )?;
                    out.push(DichotomyCase {
                        label: format!(
                            "levi={:?} ppos={:?} fm={:?} twist#{si}",
                            m.roots,
                            p.positive_part,
                            fm.entries
                        ),
                        levi_roots: m.roots.clone(),
                        parabolic_positive: p.positive_part.clone(),
                        mfacet: fm.clone(),
                        report,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Exact partition-of-unity battery: for every automorphism in the battery
/// and every stabilized closure facet of the base alcove, the z values of
/// its stabilized cofacets, grouped by fixed direction space, must sum to 1
/// in every group. Returns one labelled outcome per group.
pub fn run_partition(rs: &RootSystem) -> Result<Vec<(String, bool)>, Error> {
    let alcove = crate::apartment::fundamental_alcove(rs);
    let smalls = closure_facets(rs, &alcove);
    let mut out = Vec::new();
    for (si, sigma) in crate::apartment::automorphism_battery(rs).iter().enumerate() {
        for (fi, f1) in smalls.iter().enumerate() {
            if !stabilizes(rs, sigma, f1) {
                continue;
            }
            let mut groups: Vec<(Vec<QVec>, ZSum)> = Vec::new();
            for f in cofacets(rs, f1) {
                if !stabilizes(rs, sigma, &f) {
                    continue;
                }
                let key = fixed_subspace_key(rs, sigma, &f);
                let z = z_triple(rs, sigma, f1, &f)?;
                match groups.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, s)) => s.add_term(1, &z),
                    None => {
                        let mut s = ZSum::zero();
                        s.add_term(1, &z);
                        groups.push((key, s));
                    }
                }
            }
            for (gi, (_, total)) in groups.iter().enumerate() {
                out.push((
                    format!("twist#{si} facet#{fi} group#{gi}"),
                    total.matches(&SolidAngle::Exact(qi(1)), 5e-3),
                ));
            }
        }
    }
    Ok(out)
}

/// The top-dimensional partition sum for one small facet: z over the
/// stabilized cofacets whose fixed direction space is the whole apartment.
/// In rank 3 this exercises the Monte-Carlo estimator.
pub fn partition_sum_top(
    rs: &RootSystem,
    sigma: &ApartmentAutomorphism,
    f1: &Facet,
) -> Result<ZSum, Error> {
    let mut sum = ZSum::zero();
    for f in cofacets(rs, f1) {
        if !stabilizes(rs, sigma, &f) {
            continue;
        }
        if fixed_direction_basis(rs, sigma, &f).len() != rs.rank {
            continue;
        }
        sum.add_term(1, &z_triple(rs, sigma, f1, &f)?);
    }
    Ok(sum)
}

/// Run the Euler-characteristic/convexity probe across the battery: all
/// vertex-exclusion sets J and all level-pinning sets D over the simple
/// roots outside each Levi.
pub fn run_euler(
    rs: &RootSystem,
    n: i64,
    r: i64,
    midpoint_samples: usize,
) -> Result<Vec<(String, EulerReport)>, Error> {
    let alcove = crate::apartment::fundamental_alcove(rs);
    let window = build_window(rs, &alcove, r)?;
    let battery = crate::apartment::automorphism_battery(rs);
    let mut out = Vec::new();
    for m in crate::rootsys::levi_lattice(rs) {
        let dm_roots: Vec<usize> = rs
            .simple
            .iter()
            .copied()
            .filter(|i| !m.roots.contains(i))
            .collect();
        for fm in mfacet_battery(rs, &m) {
            for (si, sigma) in battery.iter().enumerate() {
                if !stabilizes_mfacet(rs, sigma, &m, &fm) || !sigma.is_g_compact(rs.rank) {
                    continue;
                }
                let verts = quotient_fixed_vertices(rs, sigma, &m, &fm)?;
                for jmask in 0u32..(1 << verts.len()) {
                    let j: Vec<usize> =
                        (0..verts.len()).filter(|i| jmask >> i & 1 == 1).collect();
                    for dmask in 0u32..(1 << dm_roots.len()) {
                        let d: Vec<usize> = dm_roots
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| dmask >> k & 1 == 1)
                            .map(|(_, &a)| a)
                            .collect();
                        let rep = euler_convexity_probe(
                            rs, sigma, &m, &fm, &j, &dm_roots, &d, n, &window,
                            midpoint_samples,
                        )?;
                        out.push((
                            format!(
                                "levi={:?} fm={:?} twist#{si} J={j:?} D={d:?}",
                                m.roots, fm.entries
                            ),
                            rep,
                        ));
                    }
                }
            }
        }
    }
    Ok(out)
}
