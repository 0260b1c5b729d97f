//! Subcommand implementations.

use crate::report::{self, float, opt_float, CsvRow, Format, Provenance};
use crate::{Common, LipschitzTriple, ModeArg, TripleArgs};
use anyhow::{bail, Context as _, Result};
use dustcycle::cantor::{cantor_dyadic, image_cell};
use dustcycle::cocycle::{
    convergence_table, default_workers, lipschitz_check, pairing_n, phi_n, phi_subdivision, Boundary, ConvergenceSpec,
    EngineConfig, MATRIX_LEVEL_BUDGET, SCALAR_LEVEL_BUDGET,
};
use dustcycle::fredholm::{check_constants, kernel_trace, kernel_trace_oracle, CMatrix, VertexValues};
use dustcycle::geometry::{enumerate_squares, similarity_dimension, subdivision_cells, IfsPreset};
use dustcycle::observable::{Mode, Observable};
use dustcycle::oracle::{self, bott_projection, chern_pairing_oracle, wedge_quadrature};
use dustcycle::presets::{self, Triple};
use dustcycle::CocycleReport;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::Instant;

/// Outcome of a subcommand that ran to completion.
pub enum Status {
    Ok,
    /// A checked assertion failed.
    Failed(String),
}

/// Shared options resolved once per invocation.
pub struct Context {
    common: Common,
    command: Vec<String>,
}

impl Context {
    pub fn new(common: Common, command: Vec<String>) -> Self {
        Self { common, command }
    }

    fn workers(&self) -> usize {
        self.common.workers.unwrap_or_else(default_workers).max(1)
    }

    fn engine(&self) -> EngineConfig {
        EngineConfig { workers: self.workers(), allow_large: self.common.allow_large }
    }

    fn format(&self, default: Format) -> Format {
        self.common.format.unwrap_or(default)
    }

    fn provenance(&self) -> Provenance {
        Provenance::new(self.workers(), self.command.clone())
    }

    fn millis(&self, start: Instant) -> f64 {
        if self.common.no_timing {
            0.0
        } else {
            start.elapsed().as_secs_f64() * 1e3
        }
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.common.output {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn table<R: CsvRow + Serialize>(&self, kind: &str, rows: &[R]) -> Result<()> {
        let mut out = self.writer()?;
        report::write_table(&mut out, self.format(Format::Csv), kind, &self.provenance(), rows)?;
        out.flush()?;
        Ok(())
    }

    fn check_budget(&self, levels: &RangeInclusive<u32>, budget: u32) -> Result<()> {
        if *levels.end() > budget && !self.common.allow_large {
            bail!("level {} exceeds the budget {budget}; pass --allow-large to run it", levels.end());
        }
        Ok(())
    }
}

fn parse_preset(name: &str) -> Result<IfsPreset> {
    Ok(IfsPreset::from_str(name)?)
}

/// Resolves a named triple, optionally re-evaluated under another mode.
fn resolve_triple(functions: &str, mode: Option<ModeArg>) -> Result<Triple> {
    let mut triple = presets::triple(functions)?;
    let native = if oracle::preset(functions).is_ok() { Mode::Pullback } else { Mode::Direct };
    let wanted = match mode {
        Some(ModeArg::Pullback) => Mode::Pullback,
        Some(ModeArg::Direct) => Mode::Direct,
        None => native,
    };
    if wanted != native {
        triple.functions = triple.functions.map(|o| o.with_mode(wanted));
        // Smooth functions of the plane coordinates are Lipschitz, so phi_n -> 0;
        // pulled-back coordinate functions are not periodic and have no catalogued limit.
        triple.target = match wanted {
            Mode::Direct => Some(Complex64::new(0.0, 0.0)),
            Mode::Pullback => None,
        };
        triple.name = format!("{} ({})", triple.name, if wanted == Mode::Direct { "direct" } else { "pullback" });
    }
    Ok(triple)
}

impl CsvRow for CocycleReport {
    fn header() -> &'static [&'static str] {
        &["n", "squares", "phi_re", "phi_im", "target_re", "target_im", "abs_err", "err_ratio", "ms"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.squares.to_string(),
            float(self.phi_re),
            float(self.phi_im),
            opt_float(self.target_re),
            opt_float(self.target_im),
            opt_float(self.abs_err),
            opt_float(self.err_ratio),
            float(self.wall_ms),
        ]
    }
}

pub struct ConvergeOptions {
    pub levels: RangeInclusive<u32>,
    pub cyclicity: bool,
    pub hochschild: Option<String>,
    pub check: bool,
    pub max_final_err: f64,
    pub ratio_window: (f64, f64),
}

fn cocycle_rows(ctx: &Context, args: &TripleArgs, opts: &ConvergeOptions) -> Result<Vec<CocycleReport>> {
    let preset = parse_preset(&args.preset)?;
    let triple = resolve_triple(&args.functions, args.mode)?;
    ctx.check_budget(&opts.levels, SCALAR_LEVEL_BUDGET)?;
    let quadruple = opts.hochschild.as_deref().map(presets::quadruple).transpose()?;
    let spec = ConvergenceSpec {
        preset,
        label: triple.name.clone(),
        functions: triple.refs(),
        levels: opts.levels.clone(),
        target: triple.target,
        cyclicity: opts.cyclicity,
        hochschild: quadruple.as_ref().map(|[a, b, c, d]| [a, b, c, d]),
    };
    let mut rows = convergence_table(&spec, &ctx.engine())?;
    if ctx.common.no_timing {
        rows.iter_mut().for_each(|r| r.wall_ms = 0.0);
    }
    Ok(rows)
}

pub fn phi(ctx: &Context, args: &TripleArgs, n: u32) -> Result<Status> {
    let opts = ConvergeOptions {
        levels: n..=n,
        cyclicity: false,
        hochschild: None,
        check: false,
        max_final_err: f64::INFINITY,
        ratio_window: (0.0, f64::INFINITY),
    };
    let rows = cocycle_rows(ctx, args, &opts)?;
    ctx.table("phi", &rows)?;
    Ok(Status::Ok)
}

pub fn converge(ctx: &Context, args: &TripleArgs, opts: ConvergeOptions) -> Result<Status> {
    if opts.check && resolve_triple(&args.functions, args.mode)?.target.is_none() {
        bail!("--check needs a triple with a known limit");
    }
    let rows = cocycle_rows(ctx, args, &opts)?;
    ctx.table("converge", &rows)?;
    if !opts.check {
        return Ok(Status::Ok);
    }
    let mut problems = Vec::new();
    if let Some(last) = rows.last() {
        let err = last.abs_err.unwrap_or(f64::INFINITY);
        if err >= opts.max_final_err {
            problems.push(format!("final abs_err {err:e} at n = {} is not below {}", last.n, opts.max_final_err));
        }
    }
    let (lo, hi) = opts.ratio_window;
    for r in &rows {
        if let Some(ratio) = r.err_ratio {
            if !(lo..=hi).contains(&ratio) {
                problems.push(format!("err_ratio {ratio:.4} at n = {} outside [{lo}, {hi}]", r.n));
            }
        }
    }
    Ok(if problems.is_empty() { Status::Ok } else { Status::Failed(problems.join("; ")) })
}

#[derive(Serialize)]
struct LipschitzRow {
    n: u32,
    phi_re: f64,
    phi_im: f64,
    abs_phi: f64,
    sup_f: f64,
    lip_g: f64,
    lip_h: f64,
    bound: f64,
    holds: bool,
}

impl CsvRow for LipschitzRow {
    fn header() -> &'static [&'static str] {
        &["n", "phi_re", "phi_im", "abs_phi", "sup_f", "lip_g", "lip_h", "bound", "holds"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            float(self.phi_re),
            float(self.phi_im),
            float(self.abs_phi),
            float(self.sup_f),
            float(self.lip_g),
            float(self.lip_h),
            float(self.bound),
            self.holds.to_string(),
        ]
    }
}

pub fn lipschitz(ctx: &Context, args: &LipschitzTriple, levels: RangeInclusive<u32>) -> Result<Status> {
    let preset = parse_preset(&args.preset)?;
    let triple = resolve_triple(&args.functions, args.mode)?;
    ctx.check_budget(&levels, SCALAR_LEVEL_BUDGET)?;
    let [f, g, h] = triple.refs();
    let mut rows = Vec::new();
    for n in levels {
        let c = lipschitz_check(preset, n, f, g, h, &ctx.engine())?;
        rows.push(LipschitzRow {
            n,
            phi_re: c.phi_re,
            phi_im: c.phi_im,
            abs_phi: Complex64::new(c.phi_re, c.phi_im).norm(),
            sup_f: c.sup_f,
            lip_g: c.lip_g,
            lip_h: c.lip_h,
            bound: c.bound,
            holds: c.holds,
        });
    }
    ctx.table("lipschitz", &rows)?;
    let broken: Vec<String> = rows.iter().filter(|r| !r.holds).map(|r| r.n.to_string()).collect();
    Ok(if broken.is_empty() {
        Status::Ok
    } else {
        Status::Failed(format!("decay bound violated at n = {}", broken.join(", ")))
    })
}

#[derive(Serialize)]
struct PairingRow {
    n: u32,
    degree: i32,
    pairing_re: f64,
    pairing_im: f64,
    oracle_re: f64,
    oracle_im: f64,
    abs_diff: f64,
    ms: f64,
}

impl CsvRow for PairingRow {
    fn header() -> &'static [&'static str] {
        &["n", "degree", "pairing_re", "pairing_im", "oracle_re", "oracle_im", "abs_diff", "ms"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.degree.to_string(),
            float(self.pairing_re),
            float(self.pairing_im),
            float(self.oracle_re),
            float(self.oracle_im),
            float(self.abs_diff),
            float(self.ms),
        ]
    }
}

pub fn pairing(
    ctx: &Context,
    degree: i32,
    levels: RangeInclusive<u32>,
    grid: usize,
    check: bool,
    tolerance: f64,
) -> Result<Status> {
    let field = bott_projection(degree)?;
    ctx.check_budget(&levels, MATRIX_LEVEL_BUDGET)?;
    let oracle = chern_pairing_oracle(&field, grid, ctx.workers())?;
    let p = Observable::projection(field);
    let mut rows = Vec::new();
    for n in levels {
        let start = Instant::now();
        let value = pairing_n(IfsPreset::CantorDust, n, &p, &ctx.engine())?;
        rows.push(PairingRow {
            n,
            degree,
            pairing_re: value.re,
            pairing_im: value.im,
            oracle_re: oracle.re,
            oracle_im: oracle.im,
            abs_diff: (value - oracle).norm(),
            ms: ctx.millis(start),
        });
    }
    ctx.table("pairing", &rows)?;
    let off: Vec<String> = rows.iter().filter(|r| r.abs_diff > tolerance).map(|r| r.n.to_string()).collect();
    Ok(if check && !off.is_empty() {
        Status::Failed(format!("pairing differs from the oracle by more than {tolerance} at n = {}", off.join(", ")))
    } else {
        Status::Ok
    })
}

#[derive(Serialize)]
struct CantorRow {
    p: u64,
    n: u32,
    value: String,
    float: f64,
}

impl CsvRow for CantorRow {
    fn header() -> &'static [&'static str] {
        &["p", "n", "value", "float"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.p.to_string(), self.n.to_string(), self.value.clone(), float(self.float)]
    }
}

pub fn cantor(ctx: &Context, p: u64, n: u32) -> Result<Status> {
    let value = cantor_dyadic(p, n)?;
    let row = CantorRow { p, n, value: value.to_string(), float: value.to_f64() };
    match ctx.format(Format::Text) {
        Format::Text => {
            let mut out = ctx.writer()?;
            writeln!(out, "{} {}", row.value, row.float)?;
            out.flush()?;
        }
        _ => ctx.table("cantor", &[row])?,
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct DimensionRow {
    preset: &'static str,
    dimension: f64,
}

impl CsvRow for DimensionRow {
    fn header() -> &'static [&'static str] {
        &["preset", "dimension"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.preset.to_string(), float(self.dimension)]
    }
}

pub fn dimension(ctx: &Context, preset: &str) -> Result<Status> {
    let preset = parse_preset(preset)?;
    let row = DimensionRow { preset: preset.name(), dimension: similarity_dimension(preset) };
    match ctx.format(Format::Text) {
        Format::Text => {
            let mut out = ctx.writer()?;
            writeln!(out, "{:.9}", row.dimension)?;
            out.flush()?;
        }
        _ => ctx.table("dimension", &[row])?,
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct OracleRow {
    functions: String,
    grid: usize,
    quadrature_re: f64,
    quadrature_im: f64,
    closed_re: f64,
    closed_im: f64,
    abs_diff: f64,
}

impl CsvRow for OracleRow {
    fn header() -> &'static [&'static str] {
        &["functions", "grid", "quadrature_re", "quadrature_im", "closed_re", "closed_im", "abs_diff"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.functions.clone(),
            self.grid.to_string(),
            float(self.quadrature_re),
            float(self.quadrature_im),
            float(self.closed_re),
            float(self.closed_im),
            float(self.abs_diff),
        ]
    }
}

pub fn oracle(ctx: &Context, functions: &str, grid: usize, check: bool, tolerance: f64) -> Result<Status> {
    let preset = oracle::preset(functions)?;
    let [f, g, h] = &preset.functions;
    let q = wedge_quadrature(f, g, h, grid, ctx.workers())?;
    let row = OracleRow {
        functions: preset.name.to_string(),
        grid,
        quadrature_re: q.re,
        quadrature_im: q.im,
        closed_re: preset.closed_form.re,
        closed_im: preset.closed_form.im,
        abs_diff: (q - preset.closed_form).norm(),
    };
    let diff = row.abs_diff;
    ctx.table("oracle", &[row])?;
    Ok(if check && diff > tolerance {
        Status::Failed(format!("quadrature differs from the closed form by {diff:e} > {tolerance:e}"))
    } else {
        Status::Ok
    })
}

#[derive(Serialize)]
struct SelftestRow {
    check: &'static str,
    pass: bool,
    detail: String,
}

impl CsvRow for SelftestRow {
    fn header() -> &'static [&'static str] {
        &["check", "pass", "detail"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.check.to_string(), self.pass.to_string(), self.detail.clone()]
    }
}

fn selftest_rows(cfg: &EngineConfig) -> Vec<SelftestRow> {
    let mut rows = Vec::new();
    let mut push = |check, outcome: Result<String, String>| {
        let (pass, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        rows.push(SelftestRow { check, pass, detail });
    };

    push(
        "operator identities",
        check_constants().map(|r| format!("{} identities exact", r.checks.len())).map_err(|v| v.to_string()),
    );

    push(
        "preset catalogue",
        oracle::verify_catalogue(oracle::catalogue())
            .map(|_| format!("{} presets agree with quadrature", oracle::catalogue().len()))
            .map_err(|e| e.to_string()),
    );

    push("kernel vs matrix oracle", {
        let worst = (0..64)
            .map(|k| {
                let v = |s: f64| {
                    VertexValues(
                        [0.0, 1.0, 2.0, 3.0]
                            .map(|i: f64| Complex64::new((s * (i + 1.0) + k as f64).sin(), (s * i - k as f64).cos())),
                    )
                };
                let (f, g, h) = (v(0.3), v(1.1), v(-0.7));
                let scalar = (kernel_trace(&f, &g, &h).unwrap() - kernel_trace_oracle(&f, &g, &h).unwrap()).norm();
                let m = |x: &VertexValues<Complex64>| {
                    VertexValues(x.0.map(|z| CMatrix::from_row_slice(2, 2, &[z, z.conj(), z * z, -z])))
                };
                let (fm, gm, hm) = (m(&f), m(&g), m(&h));
                let matrix =
                    (kernel_trace(&fm, &gm, &hm).unwrap() - kernel_trace_oracle(&fm, &gm, &hm).unwrap()).norm();
                scalar.max(matrix)
            })
            .fold(0.0, f64::max);
        if worst <= 1e-12 {
            Ok(format!("max |diff| {worst:.1e}"))
        } else {
            Err(format!("max |diff| {worst:e}"))
        }
    });

    push("Riemann sum 2(4/9)^n", {
        let t = presets::triple("coords").expect("built-in triple");
        let [f, g, h] = t.refs();
        let worst = (1..=6)
            .map(|n| {
                let phi = phi_n(IfsPreset::CantorDust, n, f, g, h, cfg).map(|z| z.re).unwrap_or(f64::NAN);
                let expected = 2.0 * (4.0f64 / 9.0).powi(n as i32);
                (phi - expected).abs() / expected
            })
            .fold(0.0, f64::max);
        if worst <= 1e-12 {
            Ok(format!("n = 1..6, max rel err {worst:.1e}"))
        } else {
            Err(format!("max rel err {worst:e}"))
        }
    });

    push("Cantor map bijection", {
        let mut violations = 0;
        for n in 0..=4 {
            let cells: Result<HashSet<_>, _> = enumerate_squares(IfsPreset::CantorDust, n)
                .expect("small level")
                .map(|sq| image_cell(&sq).map(|c| (c.i, c.j)))
                .collect();
            let all: HashSet<_> = subdivision_cells(n).map(|c| (c.i, c.j)).collect();
            if cells.map(|c| c != all).unwrap_or(true) {
                violations += 1;
            }
        }
        if violations == 0 {
            Ok("n = 0..4".into())
        } else {
            Err(format!("{violations} levels with violations"))
        }
    });

    push("pullback = subdivision", {
        let t = presets::triple("bott-flux").expect("built-in triple");
        let [f, g, h] = t.refs();
        let a = phi_n(IfsPreset::CantorDust, 5, f, g, h, cfg);
        let b = phi_subdivision(5, f, g, h, Boundary::Torus, cfg);
        match (a, b) {
            (Ok(a), Ok(b)) if (a - b).norm() <= 1e-12 * a.norm().max(1.0) => Ok(format!("n = 5, phi = {:.12}", a.re)),
            (a, b) => Err(format!("{a:?} vs {b:?}")),
        }
    });

    push("similarity dimension", {
        let d = similarity_dimension(IfsPreset::CantorDust);
        let exact = 4f64.ln() / 3f64.ln();
        if (d - exact).abs() < 1e-12 {
            Ok(format!("{d:.9}"))
        } else {
            Err(format!("{d} vs {exact}"))
        }
    });

    rows
}

pub fn selftest(ctx: &Context) -> Result<Status> {
    let rows = selftest_rows(&ctx.engine());
    match ctx.format(Format::Text) {
        Format::Text => {
            let mut out = ctx.writer()?;
            for r in &rows {
                writeln!(out, "{:<4} {:<26} {}", if r.pass { "ok" } else { "FAIL" }, r.check, r.detail)?;
            }
            out.flush()?;
        }
        _ => ctx.table("selftest", &rows)?,
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.check).collect();
    Ok(if failed.is_empty() { Status::Ok } else { Status::Failed(failed.join(", ")) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_override_changes_target() {
        let t = resolve_triple("bott-flux", Some(ModeArg::Direct)).unwrap();
        assert_eq!(t.target, Some(Complex64::new(0.0, 0.0)));
        assert!(t.functions.iter().all(|o| o.mode() == Mode::Direct));
        let t = resolve_triple("coords", Some(ModeArg::Pullback)).unwrap();
        assert_eq!(t.target, None);
        let t = resolve_triple("bott-flux", Some(ModeArg::Pullback)).unwrap();
        assert_eq!(t.name, "bott-flux");
        assert!(resolve_triple("nope", None).is_err());
    }

    #[test]
    fn selftest_passes() {
        assert!(selftest_rows(&EngineConfig::with_workers(1)).iter().all(|r| r.pass));
    }
}
