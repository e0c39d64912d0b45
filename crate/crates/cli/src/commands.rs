use serde_json::{json, Value};
use spinvar::analysis::{self, ClaimBundle, ClaimId, ClaimReport, Experiment};
use spinvar::cpn::{self, Functional, Method, ProjectiveDimension};
use spinvar::sample_csv::{self, SampleRow};
use spinvar::{SpinMatrices, SpinQuantum};

use crate::{Common, Failure, Format, Outcome};

const INVARIANCE_ROTATIONS: usize = 50;
const REPORT_ORBIT: usize = 20;
const DEFAULT_BOUNDS_SAMPLES: u64 = 10_000;
const DEFAULT_MEAN_SAMPLES: u64 = 200_000;
const DEFAULT_STARTS: u64 = 20;
const DEFAULT_SAMPLE_ROWS: u64 = 10;
const DEFAULT_TABLE_J: u32 = 100;

fn spin(c: &Common) -> Result<SpinQuantum, Failure> {
    c.j.ok_or_else(|| Failure::Usage("--j is required".into()))
}

fn spin_at_least_half(c: &Common, what: &str) -> Result<SpinQuantum, Failure> {
    let s = spin(c)?;
    if s.twice_j() == 0 {
        return Err(Failure::Usage(format!("{what} needs j >= 1/2")));
    }
    Ok(s)
}

fn samples(c: &Common, default: u64) -> Result<usize, Failure> {
    let n = c.samples.unwrap_or(default);
    usize::try_from(n).map_err(|_| Failure::Usage(format!("--samples {n} is too large")))
}

fn experiment(c: &Common, s: SpinQuantum) -> Result<Experiment, Failure> {
    Ok(Experiment::new(s, c.hbar, c.seed)?)
}

fn run_claim(claim: ClaimId, c: &Common, s: SpinQuantum) -> Result<ClaimReport, Failure> {
    if claim == ClaimId::Limit {
        return Ok(analysis::limit_ratio_check(s)?);
    }
    let e = experiment(c, s)?;
    let report = match claim {
        ClaimId::Invariance => e.verify_invariance(samples(c, 50)?, INVARIANCE_ROTATIONS)?,
        ClaimId::Bounds => e.verify_bounds(samples(c, DEFAULT_BOUNDS_SAMPLES)?)?,
        ClaimId::MinimumSet => e.verify_minimum_set(samples(c, DEFAULT_STARTS)?, c.tol)?,
        ClaimId::Mean => e.mean_delta_check(c.samples.unwrap_or(DEFAULT_MEAN_SAMPLES))?,
        ClaimId::JzBound => e.jz_bound_check(samples(c, DEFAULT_BOUNDS_SAMPLES)?)?,
        ClaimId::Inequalities => e.inequality_check(samples(c, DEFAULT_BOUNDS_SAMPLES)?)?,
        ClaimId::Limit => unreachable!("handled above"),
    };
    Ok(report)
}

pub fn verify(claim: ClaimId, c: &Common) -> Result<Outcome, Failure> {
    let s = match (claim, c.j) {
        (ClaimId::Limit, None) => SpinQuantum::from_twice(DEFAULT_TABLE_J),
        (ClaimId::Limit, Some(s)) => s,
        (ClaimId::Invariance | ClaimId::JzBound, _) => spin(c)?,
        _ => spin_at_least_half(c, &format!("claim {}", claim.label()))?,
    };
    let bundle = ClaimBundle::new(vec![run_claim(claim, c, s)?]);
    render_bundle(&bundle, c.format.unwrap_or(Format::Json))
}

pub fn report(c: &Common) -> Result<Outcome, Failure> {
    let s = spin_at_least_half(c, "report")?;
    let e = experiment(c, s)?;
    let bounds = usize::try_from(DEFAULT_BOUNDS_SAMPLES).expect("small constant");
    let mut claims = vec![
        e.verify_invariance(REPORT_ORBIT, REPORT_ORBIT)?,
        e.verify_bounds(bounds)?,
        e.verify_minimum_set(DEFAULT_STARTS as usize, c.tol)?,
        e.mean_delta_check(c.samples.unwrap_or(DEFAULT_MEAN_SAMPLES))?,
        e.jz_bound_check(bounds)?,
        e.inequality_check(bounds)?,
    ];
    if s.twice_j() >= 2 {
        claims.push(analysis::limit_ratio_check(s)?);
    }
    let mut bundle = ClaimBundle::new(claims);
    if s.twice_j() == 1 {
        bundle.notes.push(format!(
            "j = 1/2: the state space CP^1 is a single SU(2) orbit, so every state is coherent and Δ ≡ ħ²/2 = {}",
            c.hbar * c.hbar / 2.0
        ));
    }
    render_bundle(&bundle, c.format.unwrap_or(Format::Json))
}

pub fn mc_mean(c: &Common) -> Result<Outcome, Failure> {
    let s = spin_at_least_half(c, "mc-mean")?;
    let ops = SpinMatrices::new(s, c.hbar);
    let n = ProjectiveDimension::of_spin(s)?;
    let count = c.samples.unwrap_or(DEFAULT_MEAN_SAMPLES);
    let delta = |psi: &spinvar::PureState| spinvar::uncertainty::delta(psi, &ops).expect("dimension matches");
    let result = cpn::mean_over_cpn(
        &Functional::General(&delta),
        n,
        Method::MonteCarlo {
            samples: count,
            seed: c.seed,
        },
    )?;
    let j = s.j();
    let analytic = c.hbar * c.hbar * j * (j + 0.5);
    let floor = analysis::MC_FLOOR * ops.casimir_value();
    let pass = (result.estimate - analytic).abs() <= analysis::MC_SIGMAS * result.std_error + floor;
    let doc = json!({
        "schema": spinvar::SCHEMA,
        "j": s.to_string(),
        "hbar": c.hbar,
        "analytic_mean_delta": analytic,
        "result": result,
        "pass": pass,
    });
    let body = match c.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&doc),
        Format::Csv => csv_body(
            &["j", "hbar", "samples", "seed", "estimate", "std_error", "analytic", "pass"],
            [vec![
                s.to_string(),
                c.hbar.to_string(),
                count.to_string(),
                c.seed.to_string(),
                result.estimate.to_string(),
                result.std_error.to_string(),
                analytic.to_string(),
                pass.to_string(),
            ]],
        )?,
        Format::Text => format!(
            "j = {s}, {count} samples, seed {}\nmean Δ (MC)       {} ± {}\nmean Δ (analytic) {analytic}\n{}\n",
            c.seed,
            result.estimate,
            result.std_error,
            verdict(pass)
        ),
    };
    Ok(Outcome { body, pass })
}

pub fn minimize(c: &Common) -> Result<Outcome, Failure> {
    let s = spin_at_least_half(c, "minimize")?;
    let e = experiment(c, s)?;
    let results = e.minimize_delta(samples(c, DEFAULT_STARTS)?, c.tol)?;
    let pass = results.iter().all(|r| r.converged);
    let body = match c.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "schema": spinvar::SCHEMA,
            "j": s.to_string(),
            "hbar": c.hbar,
            "seed": c.seed,
            "tol": c.tol,
            "lower_bound": c.hbar * c.hbar * s.j(),
            "results": results.iter().enumerate().map(|(i, r)| r.to_json(i)).collect::<Vec<Value>>(),
        })),
        Format::Csv => csv_body(
            &["start", "final_delta", "iterations", "converged", "coherent_fidelity", "nx", "ny", "nz"],
            results.iter().enumerate().map(|(i, r)| {
                vec![
                    i.to_string(),
                    r.final_delta.to_string(),
                    r.iterations.to_string(),
                    r.converged.to_string(),
                    r.coherent_fidelity.to_string(),
                    r.spin_direction[0].to_string(),
                    r.spin_direction[1].to_string(),
                    r.spin_direction[2].to_string(),
                ]
            }),
        )?,
        Format::Text => {
            let mut out = format!("j = {s}, lower bound ħ²j = {}\n", c.hbar * c.hbar * s.j());
            for (i, r) in results.iter().enumerate() {
                out.push_str(&format!(
                    "start {i:>3}  Δ = {:.15}  iterations {:>5}  fidelity {:.15}  {}\n",
                    r.final_delta,
                    r.iterations,
                    r.coherent_fidelity,
                    if r.converged { "converged" } else { "NOT converged" }
                ));
            }
            out
        }
    };
    Ok(Outcome { body, pass })
}

pub fn sample(c: &Common) -> Result<Outcome, Failure> {
    let s = spin(c)?;
    let ops = SpinMatrices::new(s, c.hbar);
    let rows = sample_csv::sample_rows(&ops, samples(c, DEFAULT_SAMPLE_ROWS)?, c.seed)?;
    let body = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            sample_csv::write_sample_csv(&mut buf, &rows)?;
            String::from_utf8(buf).expect("csv output is ASCII")
        }
        Format::Json => pretty(&json!({
            "schema": spinvar::SCHEMA,
            "j": s.to_string(),
            "hbar": c.hbar,
            "seed": c.seed,
            "rows": rows.iter().map(row_json).collect::<Vec<Value>>(),
        })),
        Format::Text => rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                format!(
                    "{i:>6}  Δ = {:.15}  ⟨J⟩ = ({:.15}, {:.15}, {:.15})\n",
                    r.delta, r.mean_j[0], r.mean_j[1], r.mean_j[2]
                )
            })
            .collect(),
    };
    Ok(Outcome { body, pass: true })
}

fn row_json(r: &SampleRow) -> Value {
    json!({
        "amplitudes": r.amplitudes.iter().map(|a| [a.re, a.im]).collect::<Vec<_>>(),
        "delta": r.delta,
        "jx": r.mean_j[0],
        "jy": r.mean_j[1],
        "jz": r.mean_j[2],
    })
}

pub fn table(c: &Common) -> Result<Outcome, Failure> {
    let j_max = c.j.unwrap_or(SpinQuantum::from_twice(DEFAULT_TABLE_J));
    let rows = analysis::limit_ratio_table(j_max)?;
    let check = analysis::limit_ratio_check(j_max)?;
    let body = match c.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "schema": spinvar::SCHEMA,
            "j_max": j_max.to_string(),
            "rows": rows,
            "pass": check.pass,
        })),
        Format::Csv => csv_body(
            &["j", "numerator", "denominator", "ratio"],
            rows.iter().map(|r| {
                vec![
                    r.j.to_string(),
                    r.numerator.to_string(),
                    r.denominator.to_string(),
                    r.ratio.to_string(),
                ]
            }),
        )?,
        Format::Text => {
            let mut out = String::from("     j   mean/max\n");
            for r in &rows {
                out.push_str(&format!(
                    "{:>6}   {}/{} = {:.12}\n",
                    r.j.to_string(),
                    r.numerator,
                    r.denominator,
                    r.ratio
                ));
            }
            out.push_str(verdict(check.pass));
            out.push('\n');
            out
        }
    };
    Ok(Outcome { body, pass: check.pass })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn csv_body<I>(header: &[&str], rows: I) -> Result<String, Failure>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Runtime(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_bundle(bundle: &ClaimBundle, format: Format) -> Result<Outcome, Failure> {
    let pass = bundle.all_pass();
    let body = match format {
        Format::Json => pretty(&serde_json::to_value(bundle).expect("bundle serializes")),
        Format::Csv => csv_body(
            &["claim", "pass", "section", "key", "value"],
            bundle.claims.iter().flat_map(|c| {
                let label = c.claim.label();
                let params = c.parameters.iter().map(move |(k, v)| ("parameter", k, v));
                let details = c.details.iter().map(move |(k, v)| ("detail", k, v));
                params.chain(details).map(move |(section, k, v)| {
                    vec![
                        label.to_string(),
                        c.pass.to_string(),
                        section.to_string(),
                        k.clone(),
                        value_text(v),
                    ]
                })
            }),
        )?,
        Format::Text => {
            let mut out = String::new();
            for c in &bundle.claims {
                out.push_str(&format!("claim {:<6} {}\n", c.claim.label(), verdict(c.pass)));
                for (k, v) in c.parameters.iter().chain(&c.details) {
                    out.push_str(&format!("    {k:<32} {}\n", value_text(v)));
                }
            }
            for note in &bundle.notes {
                out.push_str(&format!("note: {note}\n"));
            }
            out
        }
    };
    Ok(Outcome { body, pass })
}
