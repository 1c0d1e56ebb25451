use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use thiserror::Error;

use circsplit::ap::{partition_ap_with, APGenerators, AlgoConfig};
use circsplit::lacunary::{
    exceed_threshold, exhaustive_min_max, gen_lacunary, gen_conformant_family, normalized_moment, min_max_threshold,
    moment_closed_form, moment_quadrature, LacunaryFamily, SampledTable,
};
use circsplit::products::{partition_product, product_spectral_ratio, ProductKind, ProductSigning, ProductSpec};
use circsplit::spectral::{er_degree_lower_bound, limit_effective_resistances, spectral_ratio_with};
use circsplit::{CirculantGraph, RatioMode, Signing};

use crate::output::{emit, float, to_json, Csv, SCHEMA};
use crate::{Cli, Command, Common, ConfigArg, FamilyArg, KindArg, ModeArg};

/// Largest difference `verify` accepts between stored and recomputed values.
const VERIFY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] circsplit::Error),
    #[error("{0}")]
    Usage(String),
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    Mismatch(String),
}

impl CliError {
    /// 2 for bad input, 3 when the walk ran out of restarts, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use circsplit::Error as E;
        match self {
            CliError::Usage(_) | CliError::Report(_) | CliError::Json(_) => 2,
            CliError::Core(E::RestartCapExceeded { .. }) => 3,
            CliError::Core(
                E::EmptyGenerators
                | E::InvalidOrder(_)
                | E::ZeroGenerator { .. }
                | E::SelfInverseGenerator { .. }
                | E::DisconnectedGraph { .. }
                | E::GeneratorNotInGraph(_)
                | E::SigningLength { .. }
                | E::InvalidThresholds { .. }
                | E::InvalidSpec(_)
                | E::ThetaNotInTheta2 { .. }
                | E::InvalidArgument(_),
            ) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    if !(c.quad_tol > 0.0) {
        return Err(CliError::Usage("--quad-tol must be positive".into()));
    }
    let start = Instant::now();
    let (mut report, sidecar) = match &cli.command {
        Command::Partition { a, b, k, n, config } => (partition(c, *a, *b, *k, *n, *config)?, None),
        Command::Sweep { a, b, ks, runs, n_rule, config } => {
            let (csv, manifest) = sweep(c, *a, *b, ks, *runs, n_rule, *config)?;
            emit(c.out.as_deref(), &csv)?;
            (manifest, c.out.as_ref().map(|p| sidecar_path(p)))
        }
        Command::Lowerbound { k, family, gap, density, samples, sampled_only } => {
            (lowerbound(c, *k, *family, *gap, *density, *samples, *sampled_only)?, None)
        }
        Command::Moments { k, p, gap, signings } => (moments(c, *k, *p, *gap, *signings)?, None),
        Command::Er { n, gens, limit } => (er(c, *n, gens, *limit)?, None),
        Command::Product { kind, n, ks } => (product(c, *kind, *n, ks)?, None),
        Command::Verify { report } => return verify(report),
    };
    if c.timing {
        report["seconds"] = json!(start.elapsed().as_secs_f64());
    }
    match (&cli.command, sidecar) {
        (Command::Sweep { .. }, Some(path)) => emit(Some(&path), &to_json(&report))?,
        (Command::Sweep { .. }, None) => {}
        _ => emit(c.out.as_deref(), &to_json(&report))?,
    }
    Ok(())
}

/// Sweeps write their CSV to `--out` and the manifest next to it.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn mode_of(c: &Common) -> Result<Option<RatioMode>> {
    match c.mode {
        None => Ok(None),
        Some(ModeArg::Exact) => Ok(Some(RatioMode::Exact)),
        Some(ModeArg::Grid) if c.oversample >= 8 => Ok(Some(RatioMode::Grid { oversample: c.oversample })),
        Some(ModeArg::Grid) => Err(CliError::Usage("--oversample must be at least 8".into())),
    }
}

fn manifest(c: &Common, command: &str, params: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": c.seed,
        "mode": c.mode.map(|m| match m { ModeArg::Exact => "exact", ModeArg::Grid => "grid" }),
        "oversample": c.oversample,
        "quad_tol": c.quad_tol,
        "restart_cap": c.restart_cap,
        "params": params,
    })
}

fn header(kind: &str, manifest: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("kind".into(), json!(kind));
    m.insert("manifest".into(), manifest);
    m
}

fn algo_config(c: &Common, config: ConfigArg, k: usize) -> Result<AlgoConfig> {
    let mut cfg = match config {
        ConfigArg::Desk => AlgoConfig::desk(k),
        ConfigArg::Asymptotic => AlgoConfig::asymptotic(k),
    };
    cfg.restart_cap = c.restart_cap;
    cfg.verify = mode_of(c)?;
    Ok(cfg)
}

fn next_prime_above(n: u64) -> u64 {
    (n + 1..).find(|&m| primal_check::miller_rabin(m)).expect("primes are unbounded")
}

fn default_order(a: u64, b: u64, k: usize) -> Result<u64> {
    (k as u64)
        .checked_mul(20)
        .and_then(|v| v.checked_mul(b))
        .and_then(|v| v.checked_add(a.checked_mul(k as u64)?))
        .map(next_prime_above)
        .ok_or_else(|| CliError::Usage("default group order overflows".into()))
}

fn order_by_rule(rule: &str, a: u64, b: u64, k: usize) -> Result<u64> {
    match rule {
        "prime20" => default_order(a, b, k),
        "4k+1" => Ok(4 * k as u64 + 1),
        _ => rule
            .strip_prefix("fixed:")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Usage(format!("unknown --n-rule {rule:?} (prime20, 4k+1 or fixed:N)"))),
    }
}

fn signs_json(x: &Signing) -> Value {
    json!(x.as_slice())
}

fn partition(c: &Common, a: u64, b: u64, k: usize, n: Option<u64>, config: ConfigArg) -> Result<Value> {
    let n = match n {
        Some(n) => n,
        None => default_order(a, b, k)?,
    };
    let spec = APGenerators::new(a, b, k, n)?;
    let cfg = algo_config(c, config, k)?;
    let out = partition_ap_with(&spec, &cfg, &mut ChaCha8Rng::seed_from_u64(c.seed), false)?;
    let config_name = match config {
        ConfigArg::Desk => "desk",
        ConfigArg::Asymptotic => "asymptotic",
    };
    let mut m = header(
        "partition",
        manifest(c, "partition", json!({"a": a, "b": b, "k": k, "n": n, "config": config_name})),
    );
    m.insert("config".into(), serde_json::to_value(cfg)?);
    m.insert("graph".into(), json!({"n": n, "generators": spec.graph().gens()}));
    m.insert("terms".into(), json!(spec.terms()));
    m.insert("signing".into(), signs_json(&out.signing));
    m.insert("graph_signing".into(), signs_json(&spec.to_graph_signing(&out.signing)?));
    m.insert("mode".into(), serde_json::to_value(out.spectral.mode)?);
    m.insert("ratio".into(), json!(out.spectral.max_ratio));
    m.insert("certified_bound".into(), json!(out.spectral.certified_bound));
    m.insert("bernstein_factor".into(), json!(out.spectral.bernstein_factor));
    m.insert("argmax_theta".into(), json!(out.spectral.argmax_theta));
    m.insert(
        "ratio_times_sqrt_k".into(),
        json!(out.spectral.certified_bound * (k as f64).sqrt()),
    );
    m.insert("conditions".into(), serde_json::to_value(&out.conditions)?);
    m.insert("rounds".into(), serde_json::to_value(&out.rounds)?);
    Ok(Value::Object(m))
}

fn random_signing(k: usize, rng: &mut ChaCha8Rng) -> Signing {
    Signing::new((0..k).map(|_| if rng.random() { 1 } else { -1 }).collect()).expect("±1 entries")
}

fn sweep(
    c: &Common,
    a: u64,
    b: u64,
    ks: &[usize],
    runs: u64,
    n_rule: &str,
    config: ConfigArg,
) -> Result<(String, Value)> {
    let mut csv = Csv::new(&[
        "k",
        "n",
        "seed",
        "ratio",
        "ratio_times_sqrt_k",
        "lambda_max",
        "moment_max",
        "random_baseline_ratio",
    ]);
    let mut rows = Vec::new();
    for &k in ks {
        let n = order_by_rule(n_rule, a, b, k)?;
        let spec = APGenerators::new(a, b, k, n)?;
        let cfg = algo_config(c, config, k)?;
        for r in 0..runs {
            let seed = c.seed.wrapping_add(r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = partition_ap_with(&spec, &cfg, &mut rng, false)?;
            let baseline = random_signing(k, &mut rng);
            let base_graph = spec.to_graph_signing(&baseline)?;
            let mode = out.spectral.mode;
            let base_ratio = spectral_ratio_with(spec.graph(), &base_graph, mode, false)?.certified_bound;
            let ratio = out.spectral.certified_bound;
            csv.row(&[
                k.to_string(),
                n.to_string(),
                seed.to_string(),
                float(ratio),
                float(ratio * (k as f64).sqrt()),
                float(out.conditions.lambda.value),
                float(out.conditions.moment.value),
                float(base_ratio),
            ]);
            rows.push(json!({
                "k": k,
                "n": n,
                "seed": seed,
                "graph": {"n": n, "generators": spec.graph().gens()},
                "mode": serde_json::to_value(mode)?,
                "graph_signing": signs_json(&spec.to_graph_signing(&out.signing)?),
                "certified_bound": ratio,
                "baseline_graph_signing": signs_json(&base_graph),
                "random_baseline_ratio": base_ratio,
            }));
        }
    }
    let params = json!({"a": a, "b": b, "ks": ks, "runs": runs, "n_rule": n_rule,
        "config": match config { ConfigArg::Desk => "desk", ConfigArg::Asymptotic => "asymptotic" }});
    let mut m = header("sweep", manifest(c, "sweep", params));
    m.insert("rows".into(), Value::Array(rows));
    Ok((csv.finish(), Value::Object(m)))
}

fn lacunary_family(k: usize, family: FamilyArg, gap: f64) -> Result<LacunaryFamily> {
    Ok(match family {
        FamilyArg::Conformant => gen_conformant_family(k)?,
        FamilyArg::Greedy => gen_lacunary(k, gap)?,
    })
}

fn lowerbound(
    c: &Common,
    k: usize,
    family: FamilyArg,
    gap: f64,
    density: u64,
    samples: usize,
    sampled_only: bool,
) -> Result<Value> {
    if k < 2 {
        return Err(CliError::Usage("--k must be at least 2".into()));
    }
    let fam = lacunary_family(k, family, gap)?;
    let table = SampledTable::new(&fam, samples, &mut ChaCha8Rng::seed_from_u64(c.seed))?;
    let mut worst: Option<(Signing, f64)> = None;
    table.for_each_class(|x, stats| {
        if worst.as_ref().is_none_or(|(_, f)| stats.exceed_fraction < *f) {
            worst = Some((x.clone(), stats.exceed_fraction));
        }
    });
    let (worst_class, min_fraction) = worst.expect("at least one class");
    let floor = 1.0 / (4.0 * k as f64);
    let params = json!({"k": k, "family": match family { FamilyArg::Conformant => "conformant", FamilyArg::Greedy => "greedy" },
        "gap": fam.gap(), "density": density, "samples": samples, "sampled_only": sampled_only});
    let mut m = header("lowerbound", manifest(c, "lowerbound", params));
    m.insert("generators".into(), json!(fam.gens()));
    m.insert(
        "sampled".into(),
        json!({
            "threshold": exceed_threshold(k),
            "min_exceed_fraction": min_fraction,
            "min_exceed_class": signs_json(&worst_class),
            "floor": floor,
            "passes": min_fraction >= floor,
        }),
    );
    if !sampled_only {
        let rep = exhaustive_min_max(&fam, density, min_max_threshold(k))?;
        m.insert(
            "exhaustive".into(),
            json!({
                "grid_nodes": rep.grid_nodes,
                "min_max": rep.min_max,
                "witness": signs_json(&rep.witness),
                "threshold": rep.threshold,
                "exceeds_threshold": rep.exceeds_threshold,
            }),
        );
    }
    Ok(Value::Object(m))
}

fn moments(c: &Common, k: usize, p: u64, gap: Option<f64>, signings: usize) -> Result<Value> {
    let fam = gen_lacunary(k, gap.unwrap_or(p as f64))?;
    let exact = moment_closed_form(k, p)?;
    let exact_f = exact.to_f64().unwrap_or(f64::NAN);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut values = Vec::with_capacity(signings);
    for i in 0..signings {
        let x = if i == 0 { Signing::all_positive(k) } else { random_signing(k, &mut rng) };
        let q = moment_quadrature(&fam, &x, p, c.quad_tol * exact_f)?;
        values.push(json!({"signing": signs_json(&x), "quadrature": q, "relative_error": (q - exact_f).abs() / exact_f}));
    }
    let params = json!({"k": k, "p": p, "gap": fam.gap(), "signings": signings});
    let mut m = header("moments", manifest(c, "moments", params));
    m.insert("generators".into(), json!(fam.gens()));
    m.insert("validity_bound".into(), json!(fam.validity_bound()));
    m.insert("closed_form_applies".into(), json!(fam.closed_form_applies(p)));
    m.insert("closed_form_exact".into(), json!(format!("{}/{}", exact.numer(), exact.denom())));
    m.insert("closed_form".into(), json!(exact_f));
    m.insert("quadrature".into(), Value::Array(values));
    if k >= 2 {
        m.insert("normalization".into(), serde_json::to_value(normalized_moment(k, p)?)?);
    }
    Ok(Value::Object(m))
}

fn er(c: &Common, n: Option<u64>, gens: &[i64], limit: bool) -> Result<Value> {
    let params = json!({"n": n, "gens": gens, "limit": limit});
    let mut m = header("er", manifest(c, "er", params));
    if limit {
        if n.is_some() {
            return Err(CliError::Usage("--limit takes no --n".into()));
        }
        let mut positive: Vec<u64> = Vec::with_capacity(gens.len());
        for &g in gens {
            if g <= 0 {
                return Err(CliError::Usage("limit generators must be positive".into()));
            }
            positive.push(g as u64);
        }
        let values = limit_effective_resistances(&positive, c.quad_tol)?;
        let top = values.iter().cloned().fold(0.0, f64::max);
        m.insert("generators".into(), json!(positive));
        m.insert("limit_resistances".into(), json!(values));
        m.insert("max".into(), json!(top));
        m.insert("k_times_max".into(), json!(top * positive.len() as f64));
        return Ok(Value::Object(m));
    }
    let n = n.ok_or_else(|| CliError::Usage("--n is required unless --limit is given".into()))?;
    let g = CirculantGraph::canonical(n, gens)?;
    let values = g.edge_effective_resistances();
    let total: f64 = values.iter().sum();
    m.insert("graph".into(), json!({"n": n, "generators": g.gens()}));
    m.insert("resistances".into(), json!(values));
    m.insert("max".into(), json!(g.max_edge_effective_resistance()));
    m.insert("degree_lower_bound".into(), json!(er_degree_lower_bound(n, g.degree() as f64)));
    m.insert("foster_sum".into(), json!(n as f64 * total));
    Ok(Value::Object(m))
}

fn product(c: &Common, kind: KindArg, n: u64, ks: &[usize]) -> Result<Value> {
    let kind = match kind {
        KindArg::Cartesian => ProductKind::Cartesian,
        KindArg::Tensor => ProductKind::Tensor,
    };
    let spec = ProductSpec::new(kind, n, ks.to_vec())?;
    if c.mode.is_some() {
        return Err(CliError::Usage("product ratios are always enumerated exactly; drop --mode".into()));
    }
    let config_for = |k: usize| {
        let mut cfg = AlgoConfig::desk(k);
        cfg.restart_cap = c.restart_cap;
        cfg
    };
    let out = partition_product(&spec, config_for, &mut ChaCha8Rng::seed_from_u64(c.seed))?;
    let params = json!({"kind": serde_json::to_value(kind)?, "n": n, "ks": ks});
    let mut m = header("product", manifest(c, "product", params));
    m.insert("product_kind".into(), serde_json::to_value(kind)?);
    m.insert("n".into(), json!(n));
    m.insert("ks".into(), json!(ks));
    m.insert(
        "per_factor".into(),
        Value::Array(out.signing.per_factor.iter().map(signs_json).collect()),
    );
    m.insert("ratio".into(), json!(out.report.max_ratio));
    m.insert("argmax".into(), json!(out.report.argmax));
    m.insert("enumerated".into(), json!(out.report.enumerated));
    m.insert("factor_ratios".into(), json!(out.factor_ratios));
    m.insert(
        "ratio_times_sqrt_k".into(),
        json!(out.report.max_ratio * spec.k_product().sqrt()),
    );
    Ok(Value::Object(m))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| CliError::Report(format!("missing field {key:?}")))
}

fn u64_field(v: &Value, key: &str) -> Result<u64> {
    field(v, key)?
        .as_u64()
        .ok_or_else(|| CliError::Report(format!("field {key:?} is not an unsigned integer")))
}

fn f64_field(v: &Value, key: &str) -> Result<f64> {
    field(v, key)?
        .as_f64()
        .ok_or_else(|| CliError::Report(format!("field {key:?} is not a number")))
}

fn graph_of(v: &Value) -> Result<CirculantGraph> {
    let g = field(v, "graph")?;
    let gens: Vec<i64> = serde_json::from_value(field(g, "generators")?.clone())?;
    Ok(CirculantGraph::canonical(u64_field(g, "n")?, &gens)?)
}

fn signing_of(v: &Value, key: &str) -> Result<Signing> {
    Ok(serde_json::from_value(field(v, key)?.clone())?)
}

fn compare(what: &str, stored: f64, fresh: f64, failures: &mut Vec<String>) {
    if !((stored - fresh).abs() <= VERIFY_TOL) {
        failures.push(format!("{what}: stored {stored:e}, recomputed {fresh:e}"));
    }
}

/// Recomputes the circulant ratio of `row` and compares it with `key`.
fn check_row(row: &Value, signing_key: &str, key: &str, label: &str, failures: &mut Vec<String>) -> Result<()> {
    let g = graph_of(row)?;
    let x = signing_of(row, signing_key)?;
    let mode: RatioMode = serde_json::from_value(field(row, "mode")?.clone())?;
    let fresh = spectral_ratio_with(&g, &x, mode, false)?.certified_bound;
    compare(label, f64_field(row, key)?, fresh, failures);
    Ok(())
}

fn verify(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    if v.get("schema").and_then(Value::as_u64) != Some(SCHEMA) {
        return Err(CliError::Report(format!("expected schema {SCHEMA}")));
    }
    field(&v, "manifest")?;
    let kind = field(&v, "kind")?
        .as_str()
        .ok_or_else(|| CliError::Report("kind is not a string".into()))?;
    let mut failures = Vec::new();
    let mut checked = 0usize;
    match kind {
        "partition" => {
            check_row(&v, "graph_signing", "certified_bound", "certified bound", &mut failures)?;
            checked += 1;
        }
        "sweep" => {
            let rows = field(&v, "rows")?
                .as_array()
                .ok_or_else(|| CliError::Report("rows is not an array".into()))?;
            for (i, row) in rows.iter().enumerate() {
                check_row(row, "graph_signing", "certified_bound", &format!("row {i} ratio"), &mut failures)?;
                check_row(
                    row,
                    "baseline_graph_signing",
                    "random_baseline_ratio",
                    &format!("row {i} baseline"),
                    &mut failures,
                )?;
                checked += 2;
            }
        }
        "product" => {
            let kind: ProductKind = serde_json::from_value(field(&v, "product_kind")?.clone())?;
            let ks: Vec<usize> = serde_json::from_value(field(&v, "ks")?.clone())?;
            let spec = ProductSpec::new(kind, u64_field(&v, "n")?, ks)?;
            let per: Vec<Signing> = serde_json::from_value(field(&v, "per_factor")?.clone())?;
            let signs = ProductSigning::new(&spec, per)?;
            let fresh = product_spectral_ratio(&spec, &signs)?.max_ratio;
            compare("product ratio", f64_field(&v, "ratio")?, fresh, &mut failures);
            checked += 1;
        }
        "er" if v.get("graph").is_some() => {
            let g = graph_of(&v)?;
            let stored: Vec<f64> = serde_json::from_value(field(&v, "resistances")?.clone())?;
            let fresh = g.edge_effective_resistances();
            if stored.len() != fresh.len() {
                return Err(CliError::Report("resistance count does not match the graph".into()));
            }
            for (i, (s, f)) in stored.iter().zip(&fresh).enumerate() {
                compare(&format!("resistance {i}"), *s, *f, &mut failures);
            }
            checked += fresh.len();
        }
        "er" | "lowerbound" | "moments" => {}
        other => return Err(CliError::Report(format!("unknown report kind {other:?}"))),
    }
    if !failures.is_empty() {
        return Err(CliError::Mismatch(failures.join("; ")));
    }
    println!("ok: {checked} value(s) re-derived within {VERIFY_TOL:e}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_classes() {
        assert_eq!(CliError::Core(circsplit::Error::RestartCapExceeded { restarts: 4 }).exit_code(), 3);
        assert_eq!(CliError::Core(circsplit::Error::InvalidSpec("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(circsplit::Error::Overflow("grid")).exit_code(), 1);
        assert_eq!(CliError::Mismatch("x".into()).exit_code(), 1);
    }

    #[test]
    fn order_rules() {
        assert_eq!(order_by_rule("prime20", 3, 7, 16).unwrap(), 2293);
        assert_eq!(order_by_rule("4k+1", 0, 1, 10).unwrap(), 41);
        assert_eq!(order_by_rule("fixed:101", 0, 1, 10).unwrap(), 101);
        assert!(order_by_rule("fixed:", 0, 1, 10).is_err());
    }
}
