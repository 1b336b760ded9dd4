//! Command-line front end for the facetcalc verification library: runs the
//! exact identity suites, enumerates apartment facets, evaluates the class
//! function operators on concrete groups, and manages the group-table cache.
//!
//! Reports are JSON on standard output (or a file) with a `schema_version`
//! field; a human-readable summary goes to standard error. Exit codes:
//! 0 all checks passed, 1 a verification failed, 2 usage or input error.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use facetcalc::apartment::{
    automorphism_battery, barycenter, build_br, check_fixed_face_bijection,
    check_fixed_factorization, classify_xn, closure_facets, contains_twisted_levi,
    enumerate_facets, facet_dim, facet_of_point, fixed_dim, fundamental_alcove,
    all_parabolic_subsets, openness_direct, openness_via_quotient, levi_of_facet,
    project_facet, sign_identity_check, stabilizes, stabilizes_mfacet,
};
use facetcalc::exact::{qi, solve, Q, QVec};
use facetcalc::finclass::{
    build_gl_cached, cache_path, gl_order, is_prime, levi_class_reps, levi_group,
    proj_cusp, res_parabolic, ind_parabolic, is_cuspidal, verify_decomposition,
    ClassFunction, GroupTable, CACHE_FORMAT_VERSION, MAX_GROUP_ORDER,
};
use facetcalc::lp::Con;
use facetcalc::rootsys::{build_root_system, levi_lattice, CartanType, RootSystem};
use facetcalc::zcancel::{partition_sum_top, run_dichotomy, run_euler, run_partition};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

const SCHEMA_VERSION: u32 = 1;
const ALL_SUITES: &[&str] = &[
    "classfun", "partition", "sign", "bijections", "strata", "dichotomy", "euler",
];

#[derive(Parser)]
#[command(name = "facetcalc", version, about = "Exact verification suites for root-system facet calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and report every identity instance.
    Verify(VerifyArgs),
    /// Enumerate the facets of a bounded symmetric box around the origin.
    Facets(FacetsArgs),
    /// Apply a class-function operator to a supplied function.
    Classfun(ClassfunArgs),
    /// Inspect or clean the group-table cache.
    Cache(CacheArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Suites to run (repeatable): classfun, partition, sign, bijections,
    /// strata, dichotomy, euler, or all.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Cartan types for the geometric suites (repeatable), e.g. A1, A2, B2, A1xA1.
    #[arg(long = "type")]
    types: Vec<String>,
    /// Groups for the class-function suite (repeatable), e.g. gl2q3.
    #[arg(long = "group")]
    groups: Vec<String>,
    /// Truncation level N for the strata/dichotomy/euler suites.
    #[arg(long = "level")]
    level: Option<i64>,
    /// Region radius R for the geometric suites.
    #[arg(long = "radius")]
    radius: Option<i64>,
    /// Seed for the sampled checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Key-value config file; command-line flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Cache directory for group tables (falls back to FACETCALC_CACHE_DIR).
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FacetsArgs {
    #[arg(long = "type")]
    cartan_type: String,
    /// All positive-root values bounded by this radius in absolute value.
    #[arg(long, default_value_t = 2)]
    radius: i64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ClassfunArgs {
    /// Group, e.g. gl2q2.
    #[arg(long)]
    group: String,
    /// Operator: res, ind, proj-cusp, is-cuspidal.
    #[arg(long)]
    op: String,
    /// Levi composition for res/ind, e.g. 1,1.
    #[arg(long)]
    levi: Option<String>,
    /// JSON input file ({"values": [...]} or {"element_values": [...]});
    /// standard input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CacheArgs {
    /// inspect or gc.
    action: String,
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Serialize, Deserialize)]
struct RunConfig {
    suites: Vec<String>,
    types: Vec<String>,
    groups: Vec<String>,
    level: i64,
    radius: i64,
    seed: u64,
    cache_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suites: vec!["all".into()],
            types: vec!["A1".into(), "A2".into()],
            groups: vec!["gl2q2".into(), "gl2q3".into()],
            level: 2,
            radius: 6,
            seed: 42,
            cache_dir: None,
        }
    }
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {} is not key = value", ln + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn build_config(a: &VerifyArgs) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    if let Some(path) = &a.config {
        let kv = parse_config_file(path)?;
        for (k, v) in &kv {
            match k.as_str() {
                "suite" | "suites" => c.suites = list(v),
                "type" | "types" => c.types = list(v),
                "group" | "groups" => c.groups = list(v),
                "level" => c.level = v.parse().context("config: bad level")?,
                "radius" => c.radius = v.parse().context("config: bad radius")?,
                "seed" => c.seed = v.parse().context("config: bad seed")?,
                "cache_dir" => c.cache_dir = Some(v.clone()),
                other => bail!("config: unknown key '{other}'"),
            }
        }
    }
    if !a.suites.is_empty() {
        c.suites = a.suites.clone();
    }
    if !a.types.is_empty() {
        c.types = a.types.clone();
    }
    if !a.groups.is_empty() {
        c.groups = a.groups.clone();
    }
    if let Some(n) = a.level {
        c.level = n;
    }
    if let Some(r) = a.radius {
        c.radius = r;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(d) = &a.cache_dir {
        c.cache_dir = Some(d.display().to_string());
    }
    // Validate.
    let mut suites: Vec<String> = Vec::new();
    for s in &c.suites {
        if s == "all" {
            suites.extend(ALL_SUITES.iter().map(|s| s.to_string()));
        } else if ALL_SUITES.contains(&s.as_str()) {
            suites.push(s.clone());
        } else {
            bail!("unknown suite '{s}' (expected one of {ALL_SUITES:?} or all)");
        }
    }
    suites.dedup();
    c.suites = suites;
    for t in &c.types {
        CartanType::from_str(t).map_err(|e| anyhow!("bad type '{t}': {e}"))?;
    }
    for g in &c.groups {
        parse_group(g)?;
    }
    if c.level < 1 || c.radius < 1 {
        bail!("level and radius must be at least 1");
    }
    Ok(c)
}

fn parse_group(s: &str) -> Result<(usize, u32)> {
    let body = s
        .strip_prefix("gl")
        .or_else(|| s.strip_prefix("GL"))
        .ok_or_else(|| anyhow!("group '{s}' must look like gl2q3"))?;
    let (n, q) = body
        .split_once(['q', 'Q'])
        .ok_or_else(|| anyhow!("group '{s}' must look like gl2q3"))?;
    let n: usize = n.parse().with_context(|| format!("group '{s}': bad n"))?;
    let q: u32 = q.parse().with_context(|| format!("group '{s}': bad q"))?;
    if n == 0 || n > 3 {
        bail!("group '{s}': n must be in 1..=3");
    }
    if !is_prime(q) {
        bail!("group '{s}': {q} is not prime");
    }
    let order = gl_order(n, q);
    if order > MAX_GROUP_ORDER {
        bail!("group '{s}': order {order} exceeds the cap of {MAX_GROUP_ORDER}");
    }
    Ok((n, q))
}

fn resolve_cache_dir(flag: Option<&str>) -> PathBuf {
    if let Some(d) = flag {
        return PathBuf::from(d);
    }
    if let Ok(d) = std::env::var("FACETCALC_CACHE_DIR") {
        return PathBuf::from(d);
    }
    std::env::temp_dir().join("facetcalc-cache")
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CaseResult {
    name: String,
    ok: bool,
    detail: String,
}

impl CaseResult {
    fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        CaseResult { name: name.into(), ok, detail: detail.into() }
    }
}

#[derive(Serialize)]
struct SuiteResult {
    suite: String,
    passed: bool,
    cases: Vec<CaseResult>,
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    command: String,
    config: RunConfig,
    passed: bool,
    suites: Vec<SuiteResult>,
}

fn emit<T: Serialize>(report: &T, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match output {
        Some(p) => std::fs::write(p, text + "\n")
            .with_context(|| format!("cannot write {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

fn suite_classfun(cfg: &RunConfig) -> Result<Vec<CaseResult>> {
    let cache = resolve_cache_dir(cfg.cache_dir.as_deref());
    let mut cases = Vec::new();
    for gname in &cfg.groups {
        let (n, q) = parse_group(gname)?;
        let g = build_gl_cached(n, q, &cache).map_err(|e| anyhow!("{gname}: {e}"))?;
        let full = levi_group(&g, &[n]);
        let nc = full.classes.len();
        // Decomposition identities, on the full delta basis for small groups.
        let basis: Vec<usize> = if g.order() <= 200 { (0..nc).collect() } else { vec![0] };
        for cls in basis {
            let rep = verify_decomposition(&g, &ClassFunction::delta(cls, nc));
            cases.push(CaseResult::new(
                format!("{gname} decomposition delta#{cls}"),
                rep.all_ok(),
                format!("{rep:?}"),
            ));
        }
        // Cuspidal projection: idempotent with cuspidal image, on the
        // trivial character.
        let one = ClassFunction::constant(qi(1), nc);
        let p = proj_cusp(&g, &full, &one);
        let pp = proj_cusp(&g, &full, &p);
        cases.push(CaseResult::new(
            format!("{gname} proj_cusp idempotent"),
            pp == p,
            String::new(),
        ));
        cases.push(CaseResult::new(
            format!("{gname} proj_cusp image cuspidal"),
            is_cuspidal(&g, &full, &p),
            String::new(),
        ));
        // Induction independent of the parabolic, per proper Levi.
        for comp in levi_class_reps(&[n], true) {
            let m = levi_group(&g, &comp);
            let f = ClassFunction::delta(0, m.classes.len());
            let up = ind_parabolic(&g, &full, &m, &f, false);
            let lo = ind_parabolic(&g, &full, &m, &f, true);
            cases.push(CaseResult::new(
                format!("{gname} induction independence levi {comp:?}"),
                up == lo,
                String::new(),
            ));
        }
    }
    Ok(cases)
}

fn suite_partition(cfg: &RunConfig) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for t in &cfg.types {
        let rs = build_root_system(&CartanType::from_str(t).unwrap());
        if rs.rank <= 2 {
            for (label, ok) in run_partition(&rs).map_err(|e| anyhow!("{t}: {e}"))? {
                cases.push(CaseResult::new(format!("{t} {label}"), ok, "exact sum = 1"));
            }
        } else {
            // Rank 3: the top-dimensional group at the origin vertex, summed
            // by Monte-Carlo estimation.
            let origin = facet_of_point(&rs, &facetcalc::exact::zeros(rs.rank));
            let id = facetcalc::apartment::ApartmentAutomorphism::identity(rs.rank);
            let sum = partition_sum_top(&rs, &id, &origin).map_err(|e| anyhow!("{t}: {e}"))?;
            let err = (sum.value - 1.0).abs();
            cases.push(CaseResult::new(
                format!("{t} origin vertex top-dimensional sum (Monte-Carlo)"),
                err <= 5e-3,
                format!("sum = {:.6}, |sum-1| = {:.2e}, half_width = {:.2e}", sum.value, err, sum.half_width),
            ));
        }
    }
    Ok(cases)
}

fn suite_sign(cfg: &RunConfig) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for t in &cfg.types {
        let rs = build_root_system(&CartanType::from_str(t).unwrap());
        if rs.rank > 2 {
            continue;
        }
        let alcove = fundamental_alcove(&rs);
        let facets = enumerate_facets(&rs, &build_br(&rs, &alcove, cfg.radius))
            .map_err(|e| anyhow!("{t}: {e}"))?;
        let battery = automorphism_battery(&rs);
        let mut checked = 0usize;
        let mut ok = true;
        for sigma in &battery {
            for f in &facets {
                if !stabilizes(&rs, sigma, f) {
                    continue;
                }
                checked += 1;
                if !sign_identity_check(&rs, sigma, f).map_err(|e| anyhow!("{t}: {e}"))? {
                    ok = false;
                }
            }
        }
        cases.push(CaseResult::new(
            format!("{t} sign identity, radius {}", cfg.radius),
            ok,
            format!("{checked} stabilized (facet, twist) pairs, battery of {}", battery.len()),
        ));
    }
    Ok(cases)
}

fn suite_bijections(cfg: &RunConfig) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for t in &cfg.types {
        let rs = build_root_system(&CartanType::from_str(t).unwrap());
        if rs.rank > 2 {
            continue;
        }
        let alcove = fundamental_alcove(&rs);
        let facets = closure_facets(&rs, &alcove);
        let battery = automorphism_battery(&rs);
        let lattice = levi_lattice(&rs);
        let mut nbij = 0usize;
        let mut nfac = 0usize;
        let mut ok_bij = true;
        let mut ok_fac = true;
        for sigma in &battery {
            for f in &facets {
                if !stabilizes(&rs, sigma, f) {
                    continue;
                }
                nbij += 1;
                if !check_fixed_face_bijection(&rs, sigma, f).map_err(|e| anyhow!("{t}: {e}"))? {
                    ok_bij = false;
                }
                for m in &lattice {
                    if !contains_twisted_levi(&rs, sigma, f, m) {
                        continue;
                    }
                    nfac += 1;
                    if !check_fixed_factorization(&rs, sigma, f, m)
                        .map_err(|e| anyhow!("{t}: {e}"))?
                    {
                        ok_fac = false;
                    }
                }
            }
        }
        cases.push(CaseResult::new(
            format!("{t} fixed-polysimplex face bijection"),
            ok_bij,
            format!("{nbij} stabilized facets"),
        ));
        cases.push(CaseResult::new(
            format!("{t} fixed-set factorization through Levi projection"),
            ok_fac,
            format!("{nfac} (facet, twist, Levi) triples"),
        ));
        // Openness/combinatorial equivalence for quotient facets.
        let window = enumerate_facets(&rs, &build_br(&rs, &alcove, 1))
            .map_err(|e| anyhow!("{t}: {e}"))?;
        let mut neq = 0usize;
        let mut ok_eq = true;
        for m in &lattice {
            for sigma in &battery {
                if !sigma.is_g_compact(rs.rank) {
                    continue;
                }
                for f0 in window.iter().take(12) {
                    let fm = project_facet(&rs, f0, m);
                    if !stabilizes_mfacet(&rs, sigma, m, &fm) {
                        continue;
                    }
                    for f in &window {
                        neq += 1;
                        if openness_direct(&rs, sigma, m, &fm, f)
                            != openness_via_quotient(&rs, sigma, m, &fm, f)
                        {
                            ok_eq = false;
                        }
                    }
                }
            }
        }
        cases.push(CaseResult::new(
            format!("{t} openness criterion equivalence"),
            ok_eq,
            format!("{neq} instances"),
        ));
    }
    Ok(cases)
}

/// Box bound for the core stratum: every root value of a point whose minimal
/// parabolic is the whole group is at most (max root height) × N.
fn core_box_bound(rs: &RootSystem, n: i64) -> Q {
    let simple_rows: Vec<QVec> =
        rs.simple.iter().map(|&i| rs.roots[i].clone()).collect();
    let mut h = qi(1);
    for &i in &rs.positive {
        if let Some(c) = solve(
            &facetcalc::exact::transpose(&simple_rows),
            &rs.roots[i],
            rs.simple.len(),
        ) {
            let s: Q = c.iter().map(|x| if x.is_negative() { -x } else { *x }).sum();
            if s > h {
                h = s;
            }
        }
    }
    h * qi(n)
}

fn suite_strata(cfg: &RunConfig) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for t in &cfg.types {
        let rs = build_root_system(&CartanType::from_str(t).unwrap());
        let all = all_parabolic_subsets(&rs);
        // Unique minimal parabolic at random rational points.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let span = 4 * cfg.level.max(1) * 100;
        let mut ok_min = true;
        for _ in 0..1000 {
            let x: QVec = (0..rs.rank)
                .map(|_| Q::new(rng.gen_range(-span..=span), 100))
                .collect();
            if classify_xn(&rs, &x, cfg.level, &all).is_none() {
                ok_min = false;
            }
        }
        cases.push(CaseResult::new(
            format!("{t} unique minimal parabolic at 1000 random points"),
            ok_min,
            format!("level {}", cfg.level),
        ));
        if rs.rank > 2 {
            continue;
        }
        // Every facet in the window falls in exactly one stratum.
        let alcove = fundamental_alcove(&rs);
        let facets = enumerate_facets(&rs, &build_br(&rs, &alcove, cfg.radius))
            .map_err(|e| anyhow!("{t}: {e}"))?;
        let mut ok_part = true;
        let mut ok_box = true;
        let bound = core_box_bound(&rs, cfg.level);
        for f in &facets {
            let b = barycenter(&rs, f);
            let Some(p) = classify_xn(&rs, &b, cfg.level, &all) else {
                ok_part = false;
                continue;
            };
            let hits = all
                .iter()
                .filter(|cand| facetcalc::apartment::facet_in_xn(&rs, f, cfg.level, cand, &all))
                .count();
            if hits != 1 {
                ok_part = false;
            }
            if p.positive_part.is_empty() && p.levi.is_full(&rs) {
                // Core stratum: must stay inside the computed box.
                for &i in &rs.positive {
                    let v = rs.eval(i, &b);
                    if v > bound || v < -bound {
                        ok_box = false;
                    }
                }
            }
        }
        cases.push(CaseResult::new(
            format!("{t} facets fall in exactly one stratum"),
            ok_part,
            format!("{} facets, radius {}", facets.len(), cfg.radius),
        ));
        cases.push(CaseResult::new(
            format!("{t} core stratum inside computed box"),
            ok_box,
            format!("all |root values| <= {bound}"),
        ));
    }
    Ok(cases)
}

fn suite_dichotomy(cfg: &RunConfig) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for t in &cfg.types {
        let rs = build_root_system(&CartanType::from_str(t).unwrap());
        if rs.rank > 2 {
            continue;
        }
        for c in run_dichotomy(&rs, cfg.level, cfg.radius).map_err(|e| anyhow!("{t}: {e}"))? {
            cases.push(CaseResult::new(
                format!("{t} {}", c.label),
                c.ok(),
                format!(
                    "in_core={} point={} computed={:?} predicted={:?}",
                    c.report.in_xmn, c.report.fixed_is_point, c.report.computed.exact,
                    c.report.predicted
                ),
            ));
        }
    }
    Ok(cases)
}

fn suite_euler(cfg: &RunConfig) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for t in &cfg.types {
        let rs = build_root_system(&CartanType::from_str(t).unwrap());
        if rs.rank > 2 {
            continue;
        }
        for (label, rep) in
            run_euler(&rs, cfg.level, cfg.radius, 200).map_err(|e| anyhow!("{t}: {e}"))?
        {
            cases.push(CaseResult::new(
                format!("{t} {label}"),
                rep.euler_ok && rep.convexity_ok,
                format!(
                    "nonempty={} facets={} sum={}",
                    rep.nonempty, rep.facet_count, rep.alternating_sum
                ),
            ));
        }
    }
    Ok(cases)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let cfg = build_config(args)?;
    let mut suites = Vec::new();
    for s in &cfg.suites {
        eprintln!("running suite: {s}");
        let cases = match s.as_str() {
            "classfun" => suite_classfun(&cfg)?,
            "partition" => suite_partition(&cfg)?,
            "sign" => suite_sign(&cfg)?,
            "bijections" => suite_bijections(&cfg)?,
            "strata" => suite_strata(&cfg)?,
            "dichotomy" => suite_dichotomy(&cfg)?,
            "euler" => suite_euler(&cfg)?,
            _ => unreachable!("validated in build_config"),
        };
        let passed = cases.iter().all(|c| c.ok);
        let failed = cases.iter().filter(|c| !c.ok).count();
        eprintln!(
            "  {}: {}/{} checks passed{}",
            s,
            cases.len() - failed,
            cases.len(),
            if passed { "" } else { "  <-- FAILURES" },
        );
        suites.push(SuiteResult { suite: s.clone(), passed, cases });
    }
    let passed = suites.iter().all(|s| s.passed);
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify".into(),
        config: cfg,
        passed,
        suites,
    };
    emit(&report, args.output.as_deref())?;
    eprintln!("overall: {}", if passed { "PASS" } else { "FAIL" });
    Ok(passed)
}

// ---------------------------------------------------------------------------
// facets
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FacetInfo {
    entries: Vec<String>,
    dim: usize,
    levi_roots: Vec<usize>,
    stabilizing_twists: Vec<TwistInfo>,
}

#[derive(Serialize)]
struct TwistInfo {
    twist: usize,
    fixed_dim: usize,
}

#[derive(Serialize)]
struct FacetsReport {
    schema_version: u32,
    command: String,
    cartan_type: String,
    radius: i64,
    battery_size: usize,
    facet_count: usize,
    counts_by_dim: BTreeMap<usize, usize>,
    facets: Vec<FacetInfo>,
}

fn cmd_facets(args: &FacetsArgs) -> Result<bool> {
    let ct = CartanType::from_str(&args.cartan_type)
        .map_err(|e| anyhow!("bad type '{}': {e}", args.cartan_type))?;
    if args.radius < 1 {
        bail!("radius must be at least 1");
    }
    let rs = build_root_system(&ct);
    // Symmetric box |alpha(x)| <= radius for all positive roots.
    let mut region: Vec<Con> = Vec::new();
    for &i in &rs.positive {
        region.push(Con::le(rs.covectors[i].clone(), qi(args.radius)));
        region.push(Con::ge(rs.covectors[i].clone(), qi(-args.radius)));
    }
    let facets = enumerate_facets(&rs, &region).map_err(|e| anyhow!("{e}"))?;
    let battery = automorphism_battery(&rs);
    let mut infos = Vec::new();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for f in &facets {
        let dim = facet_dim(&rs, f);
        *counts.entry(dim).or_insert(0) += 1;
        let twists = battery
            .iter()
            .enumerate()
            .filter(|(_, s)| stabilizes(&rs, s, f))
            .map(|(i, s)| TwistInfo { twist: i, fixed_dim: fixed_dim(&rs, s, f) })
            .collect();
        infos.push(FacetInfo {
            entries: f.entries.iter().map(|e| format!("{e:?}")).collect(),
            dim,
            levi_roots: levi_of_facet(&rs, f).roots,
            stabilizing_twists: twists,
        });
    }
    let report = FacetsReport {
        schema_version: SCHEMA_VERSION,
        command: "facets".into(),
        cartan_type: args.cartan_type.clone(),
        radius: args.radius,
        battery_size: battery.len(),
        facet_count: facets.len(),
        counts_by_dim: counts,
        facets: infos,
    };
    emit(&report, args.output.as_deref())?;
    eprintln!(
        "{}: {} facets in the box of radius {} ({:?} by dimension)",
        args.cartan_type, report.facet_count, args.radius, report.counts_by_dim
    );
    Ok(true)
}

// ---------------------------------------------------------------------------
// classfun
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct ClassfunInput {
    values: Option<Vec<String>>,
    element_values: Option<Vec<String>>,
}

#[derive(Serialize)]
struct ClassfunReport {
    schema_version: u32,
    command: String,
    group: String,
    op: String,
    levi: Option<Vec<usize>>,
    values: Option<Vec<String>>,
    cuspidal: Option<bool>,
}

fn parse_q(s: &str) -> Result<Q> {
    Q::from_str(s.trim()).map_err(|_| anyhow!("'{s}' is not a rational number"))
}

fn load_function(g: &GroupTable, num_classes: usize, input: Option<&Path>) -> Result<ClassFunction> {
    let text = match input {
        Some(p) => std::fs::read_to_string(p)
            .with_context(|| format!("cannot read {}", p.display()))?,
        None => std::io::read_to_string(std::io::stdin()).context("cannot read standard input")?,
    };
    let parsed: ClassfunInput = serde_json::from_str(&text).context("malformed JSON input")?;
    if let Some(vals) = parsed.values {
        if vals.len() != num_classes {
            bail!("expected {} class values, got {}", num_classes, vals.len());
        }
        let values = vals.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>>>()?;
        return Ok(ClassFunction { values });
    }
    if let Some(vals) = parsed.element_values {
        if vals.len() != g.order() {
            bail!("expected {} element values, got {}", g.order(), vals.len());
        }
        let ev = vals.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>>>()?;
        let mut values = vec![None; num_classes];
        for (e, v) in ev.iter().enumerate() {
            let c = g.class_of[e];
            match values[c] {
                None => values[c] = Some(*v),
                Some(w) if w == *v => {}
                Some(w) => bail!(
                    "element values are not constant on conjugacy class {c} ({w} vs {v})"
                ),
            }
        }
        return Ok(ClassFunction {
            values: values.into_iter().map(|v| v.unwrap_or_else(Q::zero)).collect(),
        });
    }
    bail!("input must contain 'values' or 'element_values'");
}

fn cmd_classfun(args: &ClassfunArgs) -> Result<bool> {
    let (n, q) = parse_group(&args.group)?;
    let cache = resolve_cache_dir(args.cache_dir.as_deref().and_then(Path::to_str));
    let g = build_gl_cached(n, q, &cache).map_err(|e| anyhow!("{e}"))?;
    let full = levi_group(&g, &[n]);
    let levi: Option<Vec<usize>> = match &args.levi {
        Some(s) => {
            let comp: Vec<usize> = s
                .split(',')
                .map(|x| x.trim().parse().context("bad levi composition"))
                .collect::<Result<_>>()?;
            if comp.iter().sum::<usize>() != n || comp.iter().any(|&c| c == 0) {
                bail!("levi composition must be positive integers summing to {n}");
            }
            Some(comp)
        }
        None => None,
    };
    let mut report = ClassfunReport {
        schema_version: SCHEMA_VERSION,
        command: "classfun".into(),
        group: args.group.clone(),
        op: args.op.clone(),
        levi: levi.clone(),
        values: None,
        cuspidal: None,
    };
    let fmt = |f: &ClassFunction| f.values.iter().map(|v| v.to_string()).collect::<Vec<_>>();
    match args.op.as_str() {
        "proj-cusp" => {
            let f = load_function(&g, full.classes.len(), args.input.as_deref())?;
            report.values = Some(fmt(&proj_cusp(&g, &full, &f)));
        }
        "is-cuspidal" => {
            let f = load_function(&g, full.classes.len(), args.input.as_deref())?;
            report.cuspidal = Some(is_cuspidal(&g, &full, &f));
        }
        "res" => {
            let comp = levi.ok_or_else(|| anyhow!("res requires --levi"))?;
            let m = levi_group(&g, &comp);
            let f = load_function(&g, full.classes.len(), args.input.as_deref())?;
            report.values = Some(fmt(&res_parabolic(&g, &full, &m, &f)));
        }
        "ind" => {
            let comp = levi.ok_or_else(|| anyhow!("ind requires --levi"))?;
            let m = levi_group(&g, &comp);
            let f = load_function(&g, m.classes.len(), args.input.as_deref())?;
            report.values = Some(fmt(&ind_parabolic(&g, &full, &m, &f, false)));
        }
        other => bail!("unknown op '{other}' (expected res, ind, proj-cusp, is-cuspidal)"),
    }
    emit(&report, args.output.as_deref())?;
    eprintln!("{} {} on {}: done", report.command, report.op, report.group);
    Ok(true)
}

// ---------------------------------------------------------------------------
// cache
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CacheEntry {
    file: String,
    size_bytes: u64,
    valid: bool,
    format_version: Option<u32>,
    n: Option<usize>,
    q: Option<u32>,
    removed: bool,
}

#[derive(Serialize)]
struct CacheReport {
    schema_version: u32,
    command: String,
    cache_dir: String,
    entries: Vec<CacheEntry>,
}

fn cmd_cache(args: &CacheArgs) -> Result<bool> {
    let gc = match args.action.as_str() {
        "inspect" => false,
        "gc" => true,
        other => bail!("unknown cache action '{other}' (expected inspect or gc)"),
    };
    let dir = resolve_cache_dir(args.cache_dir.as_deref().and_then(Path::to_str));
    let mut entries = Vec::new();
    if dir.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        for p in paths {
            let size = std::fs::metadata(&p).map(|m| m.len()).unwrap_or(0);
            let head: Option<serde_json::Value> = std::fs::read_to_string(&p)
                .ok()
                .and_then(|t| serde_json::from_str(&t).ok());
            let fv = head
                .as_ref()
                .and_then(|v| v.get("format_version"))
                .and_then(|v| v.as_u64())
                .map(|v| v as u32);
            let n = head
                .as_ref()
                .and_then(|v| v.get("n"))
                .and_then(|v| v.as_u64())
                .map(|v| v as usize);
            let qf = head
                .as_ref()
                .and_then(|v| v.get("q"))
                .and_then(|v| v.as_u64())
                .map(|v| v as u32);
            // Valid: parses, current format, and named consistently.
            let valid = matches!((fv, n, qf), (Some(v), Some(n), Some(q))
                if v == CACHE_FORMAT_VERSION && p == cache_path(&dir, n, q));
            let mut removed = false;
            if gc && !valid {
                std::fs::remove_file(&p)
                    .with_context(|| format!("cannot remove {}", p.display()))?;
                removed = true;
            }
            entries.push(CacheEntry {
                file: p.file_name().unwrap().to_string_lossy().into_owned(),
                size_bytes: size,
                valid,
                format_version: fv,
                n,
                q: qf,
                removed,
            });
        }
    }
    let report = CacheReport {
        schema_version: SCHEMA_VERSION,
        command: if gc { "cache gc".into() } else { "cache inspect".into() },
        cache_dir: dir.display().to_string(),
        entries,
    };
    emit(&report, None)?;
    eprintln!(
        "{}: {} entries ({} stale{})",
        dir.display(),
        report.entries.len(),
        report.entries.iter().filter(|e| !e.valid).count(),
        if gc { ", removed" } else { "" },
    );
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Facets(a) => cmd_facets(a),
        Command::Classfun(a) => cmd_classfun(a),
        Command::Cache(a) => cmd_cache(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
