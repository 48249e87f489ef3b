//! Batch front-end: run any pipeline, compare against the embedded golden
//! expansions, and emit machine-readable reports.
//!
//! Exit codes: 0 on success, 1 when a golden comparison fails, 2 on
//! configuration errors.

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use simell::family::Family;
use simell::frobenius;
use simell::givental::{self, fock, matrices, rrec};
use simell::golden::{self, GoldenFixture};
use simell::hypergeom::{self, build_periods};
use simell::mirror::build_mirror;
use simell::modular;
use simell::report::{CheckItem, RunReport};
use simell::series::{Exp, LogSeries, PuiseuxSeries};
use simell::sigma::apply_ode;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Periods,
    Catalog,
    Mirror,
    Jcheck,
    Correlators,
    Eta,
    Genus1,
    Certify,
    GiventalCheck,
    All,
}

/// Exact-arithmetic pipelines for the simple elliptic singularity families.
#[derive(Parser, Debug)]
#[command(name = "simell", version, about)]
struct Args {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Command,

    /// Family: p8, x9 or j10. Commands without a family flag run all three.
    #[arg(long)]
    family: Option<String>,

    /// Truncation order (integer, or n/d).
    #[arg(long, default_value = "31")]
    order: String,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Emit::Text)]
    emit: Emit,

    /// Compare against the golden coefficient prefixes; nonzero exit on mismatch.
    #[arg(long)]
    golden: bool,

    /// Directory of fixture files overriding the embedded golden data.
    #[arg(long)]
    fixtures: Option<std::path::PathBuf>,

    /// Numeric value of the formal 2*pi*i, used only by numeric emitters
    /// (defaults to the honest one).
    #[arg(long)]
    lambda_value: Option<f64>,
}

fn parse_order(s: &str) -> Option<Exp> {
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d <= 0 {
            return None;
        }
        Some(Exp::new(n, d))
    } else {
        s.trim().parse::<i64>().ok().map(Exp::from_integer)
    }
}

struct Ctx {
    order: Exp,
    golden: bool,
    fixtures: Vec<GoldenFixture>,
    lambda: Complex64,
}

impl Ctx {
    fn fixture(&self, name: &str) -> Option<GoldenFixture> {
        self.fixtures.iter().find(|f| f.name == name).cloned()
    }
}

fn config_error(msg: &str) -> ExitCode {
    eprintln!("configuration error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(order) = parse_order(&args.order) else {
        return config_error(&format!("cannot parse order {:?}", args.order));
    };
    let min_order = match args.command {
        Command::Correlators => 3,
        Command::Jcheck => 7,
        Command::Periods | Command::Eta | Command::Mirror => 4,
        Command::Catalog => 5,
        Command::Genus1 | Command::Certify => 3,
        Command::GiventalCheck => 0,
        Command::All => 7,
    };
    if order < Exp::from_integer(min_order) {
        return config_error(&format!(
            "order {} is below the minimum {} for this command",
            order, min_order
        ));
    }
    let families: Vec<Family> = match &args.family {
        None => Family::ALL.to_vec(),
        Some(name) => match Family::parse(name) {
            Some(f) => vec![f],
            None => return config_error(&format!("unknown family {name:?}")),
        },
    };
    let fixtures = match load_fixtures(&args.fixtures) {
        Ok(f) => f,
        Err(e) => return config_error(&e),
    };
    let ctx = Ctx {
        order,
        golden: args.golden,
        fixtures,
        lambda: Complex64::new(0.0, args.lambda_value.unwrap_or(2.0 * std::f64::consts::PI)),
    };

    let mut reports: Vec<RunReport> = Vec::new();
    let run_one = |cmd: Command, reports: &mut Vec<RunReport>| -> Result<(), String> {
        match cmd {
            Command::Periods => {
                for f in &families {
                    reports.push(cmd_periods(*f, &ctx)?);
                }
            }
            Command::Catalog => {
                for f in &families {
                    if *f == Family::P8 {
                        if args.family.is_some() {
                            return Err("the solution catalog covers X9 and J10 only".into());
                        }
                        continue;
                    }
                    reports.push(cmd_catalog(*f, &ctx)?);
                }
            }
            Command::Mirror => {
                for f in &families {
                    reports.push(cmd_mirror(*f, &ctx)?);
                }
            }
            Command::Jcheck => {
                for f in &families {
                    reports.push(cmd_jcheck(*f, &ctx)?);
                }
            }
            Command::Correlators => {
                // families are independent; run them concurrently
                let outs: Vec<Result<RunReport, String>> = std::thread::scope(|s| {
                    let handles: Vec<_> = families
                        .iter()
                        .map(|f| {
                            let ctx = &ctx;
                            s.spawn(move || cmd_correlators(*f, ctx))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("no panic")).collect()
                });
                for o in outs {
                    reports.push(o?);
                }
            }
            Command::Eta => reports.push(cmd_eta(&ctx)?),
            Command::Genus1 | Command::Certify => reports.push(cmd_genus1(&ctx)?),
            Command::GiventalCheck => reports.push(cmd_givental(&ctx)?),
            Command::All => unreachable!(),
        }
        Ok(())
    };

    let result = if args.command == Command::All {
        [
            Command::Periods,
            Command::Catalog,
            Command::Mirror,
            Command::Jcheck,
            Command::Correlators,
            Command::Eta,
            Command::Genus1,
            Command::GiventalCheck,
        ]
        .into_iter()
        .try_for_each(|c| run_one(c, &mut reports))
    } else {
        run_one(args.command, &mut reports)
    };
    if let Err(e) = result {
        return config_error(&e);
    }

    let mut any_fail = false;
    for rep in &reports {
        emit_report(rep, args.emit, ctx.lambda);
        if !rep.all_passed() {
            any_fail = true;
        }
    }
    if any_fail {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn load_fixtures(dir: &Option<std::path::PathBuf>) -> Result<Vec<GoldenFixture>, String> {
    let mut out = golden::embedded_fixtures();
    let Some(dir) = dir else { return Ok(out) };
    let entries = std::fs::read_dir(dir).map_err(|e| format!("fixtures dir: {e}"))?;
    for entry in entries {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().map(|e| e == "json").unwrap_or(false) {
            let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
            let fx: GoldenFixture =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            out.retain(|f| f.name != fx.name);
            out.push(fx);
        }
    }
    Ok(out)
}

fn emit_report(rep: &RunReport, emit: Emit, lambda: Complex64) {
    match emit {
        Emit::Json => println!("{}", rep.to_json_string()),
        Emit::Text => {
            let fam = rep.family.as_deref().unwrap_or("-");
            println!("== {} [{}] order {}", rep.command, fam, rep.order);
            for c in &rep.checks {
                let tag = match c.status {
                    simell::report::CheckStatus::Pass => "pass",
                    simell::report::CheckStatus::Fail => "FAIL",
                    simell::report::CheckStatus::Info => "info",
                };
                println!("  [{tag}] {}: {}", c.name, c.detail);
            }
        }
        Emit::Csv => {
            for (name, series) in &rep.series {
                println!("# {name}");
                println!("exponent,value_re,value_im");
                for t in &series.terms {
                    let c = simell::coeffs::Cyclotomic::from_json(&t.coeff)
                        .expect("round trip")
                        .embed(lambda);
                    let e = t.exp_num as f64 / t.exp_den as f64;
                    println!("{e},{},{}", c.re, c.im);
                }
            }
            for c in &rep.checks {
                if c.status == simell::report::CheckStatus::Fail {
                    eprintln!("FAIL {}: {}", c.name, c.detail);
                }
            }
        }
    }
}

fn golden_check(
    rep: &mut RunReport,
    ctx: &Ctx,
    fixture_name: &str,
    series: &PuiseuxSeries,
) {
    let Some(fx) = ctx.fixture(fixture_name) else {
        rep.checks.push(CheckItem::fail(fixture_name, "fixture not found"));
        return;
    };
    let out = golden::check_against(series, &fx);
    if out.passed() {
        rep.checks.push(CheckItem::pass(
            format!("golden:{fixture_name}"),
            format!("{} quoted coefficients matched exactly", out.matched),
        ));
    } else {
        rep.checks.push(CheckItem::fail(
            format!("golden:{fixture_name}"),
            out.mismatches.join("; "),
        ));
    }
}

fn cmd_periods(family: Family, ctx: &Ctx) -> Result<RunReport, String> {
    let mut rep = RunReport::new("periods", Some(family.name()), ctx.order);
    let order = ctx.order;
    let p = build_periods(family, order);
    let pf = hypergeom::picard_fuchs();
    let check_order = order - Exp::from_integer(4);
    let ra = apply_ode(&pf, &LogSeries::from_base(p.pi_a.clone()), check_order)
        .map_err(|e| e.to_string())?;
    rep.checks.push(CheckItem::of(
        "pf-annihilates-pi-a",
        ra.base.truncated(check_order).is_zero() && ra.log_part.is_zero(),
        format!("residual checked through order {check_order}"),
    ));
    let rb = apply_ode(&pf, &p.pi_b, check_order).map_err(|e| e.to_string())?;
    rep.checks.push(CheckItem::of(
        "pf-annihilates-pi-b",
        rb.base.truncated(check_order).is_zero() && rb.log_part.truncated(check_order).is_zero(),
        format!("residual checked through order {check_order}"),
    ));
    let w = hypergeom::wronskian(&p).map_err(|e| e.to_string())?;
    let disc = simell::sigma::SigmaPoly::from_ints(&[27, 0, 0, 1]).expand_u(w.trunc_order());
    let prod = w.try_mul(&disc).map_err(|e| e.to_string())?;
    let m = family.pi_b_multiplier();
    let const_ok = prod.coeff(Exp::from_integer(0))
        == simell::coeffs::Cyclotomic::from_int(3 * m).shift_lambda(-1)
        && prod.num_terms() == 1;
    rep.checks.push(CheckItem::of(
        "wronskian-constant",
        const_ok,
        format!("(pi_B' pi_A - pi_B pi_A') (27 + s^3) = {}m / Lambda", 3),
    ));
    rep.series.insert("pi_a".into(), p.pi_a.to_json());
    rep.series.insert("pi_b_log_free_part".into(), p.pi_b.base.to_json());
    Ok(rep)
}

fn cmd_catalog(family: Family, ctx: &Ctx) -> Result<RunReport, String> {
    let mut rep = RunReport::new("catalog", Some(family.name()), ctx.order);
    let systems = hypergeom::phi_catalog(family, ctx.order).map_err(|e| e.to_string())?;
    for sys in &systems {
        for sec in &sys.sections {
            let residuals = sys.residuals(sec).map_err(|e| e.to_string())?;
            for (i, r) in residuals.iter().enumerate() {
                let name = format!("{}[{}] row {}", sys.phi_names.join(","), sec.name, i);
                rep.checks.push(CheckItem::of(
                    name,
                    r.is_zero(),
                    format!("residual zero through order {}", r.trunc_order()),
                ));
            }
            for (phi, comp) in sys.phi_names.iter().zip(&sec.components) {
                rep.series
                    .insert(format!("{}[{}]", phi, sec.name), comp.to_json());
            }
        }
    }
    Ok(rep)
}

fn cmd_mirror(family: Family, ctx: &Ctx) -> Result<RunReport, String> {
    let mut rep = RunReport::new("mirror", Some(family.name()), ctx.order);
    let p = build_periods(family, ctx.order + Exp::from_integer(2));
    let m = build_mirror(&p, ctx.order).map_err(|e| e.to_string())?;
    rep.checks.push(CheckItem::info(
        "derived-uniformizer",
        format!(
            "r = {} (quoted Fourier expansions use r = {})",
            m.r_derived, m.r_quoted
        ),
    ));
    let comp = m
        .q_of_u
        .renamed(simell::series::Var::Q)
        .compose_integer(&m.u_of_q)
        .map_err(|e| e.to_string())?;
    let id_ok = comp.coeff(Exp::from_integer(1)).is_one() && comp.num_terms() == 1;
    rep.checks.push(CheckItem::of("mutual-inverses", id_ok, "u(q(u)) = u to order"));
    rep.series.insert("u_of_q".into(), m.u_of_q.to_json());
    rep.series.insert("q_of_u".into(), m.q_of_u.to_json());
    Ok(rep)
}

fn cmd_jcheck(family: Family, ctx: &Ctx) -> Result<RunReport, String> {
    let mut rep = RunReport::new("jcheck", Some(family.name()), ctx.order);
    let work = ctx.order + Exp::from_integer(14);
    let p = build_periods(family, work);
    let m = build_mirror(&p, work - Exp::from_integer(2)).map_err(|e| e.to_string())?;
    let j = m.j_expansion(ctx.order).map_err(|e| e.to_string())?;
    let oracle = m.klein_j_reference(ctx.order);
    let agree = j == oracle.truncated(j.trunc_order());
    rep.checks.push(CheckItem::of(
        "matches-eisenstein-oracle",
        agree,
        format!("j-expansion equals E4^3/Delta reference through order {}", ctx.order),
    ));
    if family == Family::P8 && ctx.golden {
        golden_check(&mut rep, ctx, "p8-j-invariant", &j);
    }
    rep.series.insert("j_expansion".into(), j.to_json());
    Ok(rep)
}

fn cmd_correlators(family: Family, ctx: &Ctx) -> Result<RunReport, String> {
    let mut rep = RunReport::new("correlators", Some(family.name()), ctx.order);
    let names = frobenius::correlator_catalog(family);
    let fixtures = golden::correlator_fixture_names(family);
    for ((name, _), fixture) in names.iter().zip(fixtures.iter()) {
        let c = frobenius::correlator(family, name, ctx.order).map_err(|e| e.to_string())?;
        if ctx.golden {
            golden_check(&mut rep, ctx, fixture, &c.q_series);
        } else {
            rep.checks.push(CheckItem::info(*name, "computed"));
        }
        rep.series.insert(name.to_string(), c.q_series.to_json());
    }
    Ok(rep)
}

fn cmd_eta(ctx: &Ctx) -> Result<RunReport, String> {
    let mut rep = RunReport::new("eta", Some("P8"), ctx.order);
    let ok = frobenius::eta_identity_check(ctx.order).map_err(|e| e.to_string())?;
    rep.checks.push(CheckItem::of(
        "eta-product-identity",
        ok,
        format!("-i pi_A equals the eta product exactly through order {}", ctx.order),
    ));
    let eta = frobenius::saito_eta_product(ctx.order).map_err(|e| e.to_string())?;
    if ctx.golden {
        golden_check(&mut rep, ctx, "p8-eta-product", &eta);
    }
    rep.series.insert("eta_product".into(), eta.to_json());
    Ok(rep)
}

fn cmd_genus1(ctx: &Ctx) -> Result<RunReport, String> {
    let mut rep = RunReport::new("genus1", Some("P8"), ctx.order);
    let order = ctx.order.max(Exp::from_integer(24));
    let d = frobenius::genus1_derivative(Family::P8, order).map_err(|e| e.to_string())?;
    let c0 = d.coeff(Exp::from_integer(0));
    rep.checks.push(CheckItem::of(
        "constant-term",
        c0 == simell::coeffs::Cyclotomic::rational(-1, 24),
        format!("constant term {}", c0.display_string()),
    ));
    let n = *order.numer();
    let basis = modular::weight2_basis_p8(n);
    let cert = modular::decompose_quasimodular(
        &d,
        "dF1/dt",
        2,
        1,
        &basis,
        order - Exp::from_integer(2),
    )
    .map_err(|e| e.to_string())?;
    rep.checks.push(CheckItem::of(
        "certificate-residual-zero",
        cert.residual_zero,
        format!(
            "matched through order {}; kernel dimension {}",
            cert.matched_order, cert.kernel_dim
        ),
    ));
    let anomaly = modular::g2_anomaly_check(&cert, &basis, 8);
    rep.checks.push(CheckItem::of(
        "anomaly-coefficient",
        anomaly.matches,
        format!(
            "total {}/{} against mu/24 - 1/2 = {}/{}",
            anomaly.from_certificate[0],
            anomaly.from_certificate[1],
            anomaly.expected[0],
            anomaly.expected[1]
        ),
    ));
    rep.checks.push(CheckItem::info(
        "certificate",
        serde_json::to_string(&cert).expect("serializes"),
    ));
    rep.series.insert("genus1_derivative".into(), d.to_json());
    Ok(rep)
}

fn cmd_givental(ctx: &Ctx) -> Result<RunReport, String> {
    let mut rep = RunReport::new("givental-check", None, ctx.order);
    let perm = matrices::p8_involution();
    for k in [0i64, 1, 2] {
        rep.checks.push(CheckItem::of(
            format!("jacobian-closed-form[k={k}]"),
            matrices::jacobian_is_differential_inverse(k),
            "stated matrix inverts the coordinate differential",
        ));
        rep.checks.push(CheckItem::of(
            format!("jacobian-pairing[k={k}]"),
            matrices::jacobian_preserves_pairing(k),
            "pairing carried to j^2 times itself",
        ));
        rep.checks.push(CheckItem::of(
            format!("m0-limits[k={k}]"),
            matrices::m0_limit_identities(k),
            "M0^{-1} = j J^{-1} and M0 TM = X at 't = 0",
        ));
        rep.checks.push(CheckItem::of(
            format!("xtilde-composition[k={k}]"),
            matrices::xtilde_composition_law(k),
            "completion transforms through X^{-1}(j^2 z)",
        ));
        let nu = matrices::build_nu_matrices(k);
        rep.checks.push(CheckItem::of(
            format!("x-symplectic[k={k}]"),
            matrices::symplectic_check(&nu.x, &perm),
            "TX(-z) X(z) = I",
        ));
    }
    rep.checks.push(CheckItem::of(
        "nu-composition",
        matrices::nu_composition_law(1, 2),
        "coordinate maps compose as matrix-product data",
    ));
    // sampled symplectic checks for five rational group elements
    let samples = [(2i64, 3i64, 5i64), (-1, 7, 2), (4, -3, 9), (1, 1, 3), (-5, 2, 7)];
    let nu = matrices::build_nu_matrices(1);
    let sampled = samples.iter().all(|(a, b, c)| {
        let map = matrices::random_nu_subst(
            simell::coeffs::rat(*a, 1),
            simell::coeffs::rat(*b, 1),
            simell::coeffs::rat(*c, 1),
        );
        matrices::symplectic_check(&nu.x.subst(&map), &perm)
    });
    rep.checks.push(CheckItem::of("x-symplectic-sampled", sampled, "five rational elements"));
    // kernels
    let mut a1 = matrices::Mat::zero(2);
    a1.e[0][1] = givental::RatFn::var(givental::syms::S);
    let r = matrices::ZMatrix::from_parts(vec![(0, matrices::Mat::identity(2)), (1, a1)]);
    let v_ok = matrices::v_kernel(&r, &[1, 0], 2).is_ok();
    rep.checks.push(CheckItem::of("v-kernel-divisible", v_ok, "unipotent upper factor"));
    let mut s1 = matrices::Mat::zero(8);
    s1.e[0][1] = givental::RatFn::var(givental::syms::T[0]);
    let s = matrices::ZMatrix::from_parts(vec![(0, matrices::Mat::identity(8)), (-1, s1.clone())]);
    let w = matrices::w_kernel(&s, &perm, 1).map_err(|e| e.to_string())?;
    rep.checks.push(CheckItem::of(
        "w-kernel-calibration",
        w[&(0, 0)].eq_exact(&s1),
        "W00 reproduces the flat-coordinate quadratic form",
    ));
    // cocycle table
    use fock::Darboux::{P, Q};
    let cocycle_ok = fock::cocycle((P(0, 1), P(1, 2)), (Q(0, 1), Q(1, 2))) == 1
        && fock::cocycle((P(0, 1), P(0, 1)), (Q(0, 1), Q(0, 1))) == 2
        && fock::cocycle((P(0, 1), Q(0, 1)), (Q(0, 1), Q(0, 1))) == 0;
    rep.checks.push(CheckItem::of("cocycle-table", cocycle_ok, "support and values"));
    // quantized composition on the toy
    let comp_ok = {
        let perm2 = vec![1usize, 0];
        let mk = |c: simell::coeffs::Rat, k: i32| {
            let mut a = matrices::Mat::zero(2);
            a.e[0][1] = givental::RatFn::constant_rat(c);
            matrices::ZMatrix::from_parts(vec![(0, matrices::Mat::identity(2)), (k, a)])
        };
        let r1 = mk(simell::coeffs::rat(1, 2), 1);
        let r2 = mk(simell::coeffs::rat(-1, 3), 3);
        let mut f = fock::TruncatedPotential::new(2, 2, 4, 8);
        f.set_term(1, vec![((0, 0), 1)], givental::RatFn::constant_rat(simell::coeffs::rat(1, 24)));
        f.set_term(
            1,
            vec![((0, 0), 1), ((0, 1), 1)],
            givental::RatFn::constant_rat(simell::coeffs::rat(5, 12)),
        );
        f.set_term(
            2,
            vec![((3, 1), 1), ((0, 0), 1)],
            givental::RatFn::constant_rat(simell::coeffs::rat(1, 1152)),
        );
        let lhs = {
            let (g1, _) = fock::apply_r_hat(&r1, &perm2, &f).map_err(|e| e.to_string())?;
            fock::apply_r_hat(&r2, &perm2, &g1).map_err(|e| e.to_string())?.0
        };
        let rhs = fock::apply_r_hat(&r2.mul(&r1), &perm2, &f).map_err(|e| e.to_string())?.0;
        lhs == rhs && lhs.is_tame()
    };
    rep.checks.push(CheckItem::of(
        "quantized-composition",
        comp_ok,
        "two upper-triangular actions compose, tameness preserved",
    ));
    // weight law oracle
    let weight_ok = [0i64, 1, 2].into_iter().all(|k| {
        fock::weight_rescaling_oracle(&vec![((0, 0), 2), ((1, 1), 1)], 1, k, Family::P8)
            && fock::weight_rescaling_oracle(&vec![((0, 2), 1), ((0, 7), 1)], 0, k, Family::P8)
    });
    rep.checks.push(CheckItem::of(
        "weight-law",
        weight_ok,
        "rescaling factor is j^{2g-2+m(I)} with phase e^{-2 pi i d(I) k}",
    ));
    // recursion toy
    let toy = rrec::two_point_toy();
    let recursion_ok = {
        let r1 = rrec::r1_from_frame(&toy).map_err(|e| e.to_string())?;
        let r2 = rrec::recursion_step(&toy, &r1, &r1, 1).map_err(|e| e.to_string())?;
        let direct = rrec::r2_direct_solve(&toy, &r1).map_err(|e| e.to_string())?;
        r2.eq_exact(&direct) && rrec::r_recursion_check(&toy, &[r1, r2]).map_err(|e| e.to_string())?.all_ok
    };
    rep.checks.push(CheckItem::of(
        "r-recursion-two-point",
        recursion_ok,
        "recursion and direct linear solve agree",
    ));
    Ok(rep)
}
