//! `wwmv`: phase-space transforms, products and evolutions from the command line.
//!
//! Every subcommand reads and writes text field files and prints a TSV table
//! with a header row on stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use phasespace::io::{read_field, write_field, Field};
use phasespace::lca::{self, FiniteAbelianGroup, GroupFunction};
use phasespace::star::{semiclassical_check, star, von_neumann_evolve};
use phasespace::wigner::{self, coherent_state, husimi, kernel_to_phase, trace, wigner_of_pure, CoherentParams};
use phasespace::{extension, selftest, Error, GridSpec, PhaseSpaceFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subcommand {
    /// Wigner function of a wave function or kernel (coherent state if no input)
    Wigner,
    /// Husimi function of a phase-space function
    Husimi,
    /// Star product, or twisted convolution with --twisted
    Star,
    /// Von Neumann evolution, free Hamiltonian unless --b is given
    Evolve,
    /// Fourier analysis and the star product on a finite Abelian group
    Lca,
    /// Quasi-momentum conservation demo on a cyclic group
    Umklapp,
    /// Order fits of the small-ħ expansion of the star product
    Semiclassical,
    /// Quick run of the invariant suite
    Selftest,
}

/// Command-line configuration. Validated before any computation.
#[derive(Debug, Parser)]
#[command(name = "wwmv", version, about = "Weyl-Wigner-Moyal phase-space calculus")]
struct RunConfig {
    subcommand: Subcommand,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long)]
    b: Option<PathBuf>,
    /// Grid as `n,N,L`
    #[arg(long, default_value = "1,128,20")]
    grid: String,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Group orders `N1,N2,...`
    #[arg(long)]
    orders: Option<String>,
    /// Ordering exponent for finite-group quantization
    #[arg(long, default_value_t = 0)]
    p: u8,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Tolerance scale applied by `selftest`
    #[arg(long, default_value_t = 1.0)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Central-extension sector for `star`
    #[arg(long)]
    twisted: Option<i64>,
    /// Coherent-state center `q,p` for `wigner` without input
    #[arg(long, default_value = "0,0")]
    center: String,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Selftest(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Run = Result<(), Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Lib(Error::Validation(msg.into()))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Parse(format!("bad {what} entry `{x}` in `{s}`"))))
        .collect()
}

impl RunConfig {
    fn validate(&self) -> Result<(), Error> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.hbar, "--hbar")?;
        positive(self.mass, "--mass")?;
        positive(self.dt, "--dt")?;
        positive(self.tol, "--tol")?;
        if self.p > 1 {
            return Err(Error::Validation(format!("--p must be 0 or 1, got {}", self.p)));
        }
        let g = self.grid_spec()?;
        if g.dim() > 2 {
            return Err(Error::Validation(format!("the CLI handles n ≤ 2, got n={}", g.dim())));
        }
        if let Some(o) = &self.orders {
            parse_list::<usize>(o, "order")?;
        }
        parse_list::<f64>(&self.center, "center")?;
        Ok(())
    }

    fn grid_spec(&self) -> Result<GridSpec, Error> {
        let parts: Vec<&str> = self.grid.split(',').collect();
        let [n, pts, len] = parts[..] else {
            return Err(Error::Parse(format!("--grid wants `n,N,L`, got `{}`", self.grid)));
        };
        let bad = |w: &str| Error::Parse(format!("bad --grid entry `{w}`"));
        GridSpec::new(
            n.trim().parse().map_err(|_| bad(n))?,
            pts.trim().parse().map_err(|_| bad(pts))?,
            len.trim().parse().map_err(|_| bad(len))?,
            self.hbar,
            self.mass,
        )
    }

    fn group(&self) -> Result<FiniteAbelianGroup, Error> {
        let orders = self.orders.as_deref().ok_or_else(|| Error::Validation("--orders is required".into()))?;
        FiniteAbelianGroup::new(&parse_list::<usize>(orders, "order")?)
    }

    fn required<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf, Error> {
        path.as_ref().ok_or_else(|| Error::Validation(format!("{flag} is required for this subcommand")))
    }
}

fn read_phase(path: &PathBuf) -> Result<PhaseSpaceFunction, Error> {
    match read_field(path)? {
        Field::Phase(f) => Ok(f),
        other => Err(Error::Validation(format!("{} holds a {} field, expected phase2d", path.display(), other.kind()))),
    }
}

fn write_out(cfg: &RunConfig, field: Field) -> Run {
    if let Some(path) = &cfg.out {
        write_field(path, &field)?;
    }
    Ok(())
}

fn print_trace(tr: Complex64) {
    println!("trace_re\ttrace_im");
    println!("{:.16e}\t{:.16e}", tr.re, tr.im);
}

fn cmd_wigner(cfg: &RunConfig) -> Run {
    let rho = match &cfg.input {
        Some(path) => match read_field(path)? {
            Field::Wave(psi) => wigner_of_pure(&psi),
            Field::Kernel(k) => kernel_to_phase(&k),
            other => return Err(invalid(format!("cannot take the Wigner function of a {} field", other.kind()))),
        },
        None => {
            let c = parse_list::<f64>(&cfg.center, "center")?;
            let g = cfg.grid_spec()?;
            if c.len() != 2 * g.dim() {
                return Err(invalid(format!("--center needs {} numbers", 2 * g.dim())));
            }
            let (q, p) = c.split_at(g.dim());
            wigner_of_pure(&coherent_state(&CoherentParams::standard(q.to_vec(), p.to_vec())?, &g)?)
        }
    };
    print_trace(trace(&rho));
    write_out(cfg, Field::Phase(rho))
}

fn cmd_husimi(cfg: &RunConfig) -> Run {
    let rho = read_phase(cfg.required(&cfg.input, "--in")?)?;
    let h = husimi(&rho);
    println!("min\tmax_imag");
    println!("{:.16e}\t{:.16e}", h.min_real(), h.max_imag());
    write_out(cfg, Field::Phase(h))
}

fn cmd_star(cfg: &RunConfig) -> Run {
    let a = read_field(cfg.required(&cfg.a, "--a")?)?;
    let b = read_field(cfg.required(&cfg.b, "--b")?)?;
    match (a, b) {
        (Field::Phase(a), Field::Phase(b)) => {
            let product = match cfg.twisted {
                Some(n) => extension::twisted_convolve(&a, &b, n, cfg.mass)?,
                None => star(&a, &b)?,
            };
            print_trace(trace(&product));
            write_out(cfg, Field::Phase(product))
        }
        (Field::PhaseG(a), Field::PhaseG(b)) => {
            if cfg.twisted.is_some() {
                return Err(invalid("--twisted applies to grid functions only"));
            }
            let product = lca::star_g(&a, &b, cfg.p as f64)?;
            let tr = lca::quantize_symbol(&product, cfg.p as f64)?.trace();
            print_trace(tr);
            write_out(cfg, Field::PhaseG(product))
        }
        (a, b) => Err(invalid(format!("cannot multiply a {} field by a {} field", a.kind(), b.kind()))),
    }
}

fn cmd_evolve(cfg: &RunConfig) -> Run {
    let rho = read_phase(cfg.required(&cfg.input, "--in")?)?;
    let h = match &cfg.b {
        Some(path) => read_phase(path)?,
        None => {
            let m = rho.grid().mass();
            PhaseSpaceFunction::from_real_fn(rho.grid(), |_, p| p.iter().map(|x| x * x).sum::<f64>() / (2.0 * m))
        }
    };
    let out = von_neumann_evolve(&rho, &h, cfg.dt, cfg.steps)?;
    println!("t\ttrace_re\ttrace_im\tpurity");
    let tr = trace(&out);
    let purity = wigner::hs_inner(&out, &out)?.re;
    println!("{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}", cfg.dt * cfg.steps as f64, tr.re, tr.im, purity);
    write_out(cfg, Field::Phase(out))
}

fn cmd_lca(cfg: &RunConfig) -> Run {
    let f = match &cfg.input {
        Some(path) => match read_field(path)? {
            Field::Group(f) => f,
            other => return Err(invalid(format!("lca expects a groupfn field, got {}", other.kind()))),
        },
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            GroupFunction::from_fn(&cfg.group()?, |_| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        }
    };
    let group = f.group().clone();
    let hat = lca::fourier(&f);
    let round_trip = lca::inverse_fourier(&hat).max_abs_diff(&f);
    let unit = lca::star_kernel(&group, cfg.p as f64)?.unit()?;
    let identity = lca::symbol_of(&DMatrix::identity(group.size(), group.size()), &group, cfg.p as f64)?;
    println!("size\tnorm_sqr\tdual_norm_sqr\tround_trip\tunit_error");
    println!(
        "{}\t{:.16e}\t{:.16e}\t{:.3e}\t{:.3e}",
        group.size(),
        f.norm_sqr(),
        hat.norm_sqr() / group.size() as f64,
        round_trip,
        unit.max_abs_diff(&identity)
    );
    write_out(cfg, Field::Group(hat))
}

fn cmd_umklapp(cfg: &RunConfig) -> Run {
    let group = match &cfg.orders {
        Some(_) => cfg.group()?,
        None => FiniteAbelianGroup::cyclic(16)?,
    };
    let r = lca::conservation_demo(&group, 1.0, cfg.steps)?;
    println!("sites\tsteps\toccupation_drift\tnorm_drift\tumklapp_pairs");
    println!("{}\t{}\t{:.3e}\t{:.3e}\t{}", r.sites, r.steps, r.max_occupation_drift, r.norm_drift, r.umklapp_pairs);
    Ok(())
}

fn cmd_semiclassical(cfg: &RunConfig) -> Run {
    let base = cfg.grid_spec()?;
    if base.dim() != 1 {
        return Err(invalid("semiclassical runs on a 1D grid"));
    }
    let hbars = [1.0, 0.5, 0.25, 0.125];
    let r = semiclassical_check(
        |q, p| Complex64::new((-((q[0] - 0.5).powi(2) + p[0] * p[0]) / 2.0).exp(), 0.0),
        |q, p| Complex64::new((-(q[0] * q[0] + (p[0] - 0.5).powi(2)) / 2.0).exp(), 0.0),
        &base,
        &hbars,
    )?;
    println!("hbar\tr0\tr1\tr2");
    for k in 0..hbars.len() {
        println!("{}\t{:.6e}\t{:.6e}\t{:.6e}", hbars[k], r.r0[k], r.r1[k], r.r2[k]);
    }
    println!("order\t{:.3}\t{:.3}\t{:.3}", r.order_r0, r.order_r1, r.order_r2);
    Ok(())
}

fn cmd_selftest(cfg: &RunConfig) -> Run {
    let results = selftest::run_selftest(cfg.tol, cfg.seed);
    for r in &results {
        println!("{}\t{}\t{}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    match results.iter().filter(|r| !r.passed).count() {
        0 => Ok(()),
        n => Err(Failure::Selftest(n)),
    }
}

fn dispatch(cfg: &RunConfig) -> Run {
    cfg.validate()?;
    match cfg.subcommand {
        Subcommand::Wigner => cmd_wigner(cfg),
        Subcommand::Husimi => cmd_husimi(cfg),
        Subcommand::Star => cmd_star(cfg),
        Subcommand::Evolve => cmd_evolve(cfg),
        Subcommand::Lca => cmd_lca(cfg),
        Subcommand::Umklapp => cmd_umklapp(cfg),
        Subcommand::Semiclassical => cmd_semiclassical(cfg),
        Subcommand::Selftest => cmd_selftest(cfg),
    }
}

fn run(argv: impl IntoIterator<Item = String>) -> u8 {
    let cfg = match RunConfig::try_parse_from(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cfg) {
        Ok(()) => 0,
        Err(Failure::Selftest(n)) => {
            eprintln!("wwmv: {n} selftest check(s) failed");
            3
        }
        Err(Failure::Lib(e)) => {
            eprintln!("wwmv: {e}");
            match e {
                Error::Io(_) => 1,
                _ => 2,
            }
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("wwmv").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults() {
        let c = cfg(&["wigner"]);
        let g = c.grid_spec().unwrap();
        assert_eq!((g.dim(), g.points(), g.length(), g.hbar(), g.mass()), (1, 128, 20.0, 1.0, 1.0));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation() {
        assert!(cfg(&["wigner", "--grid", "3,8,4"]).validate().is_err());
        assert!(cfg(&["wigner", "--grid", "1,7,4"]).validate().is_err());
        assert!(cfg(&["wigner", "--grid", "1,x,4"]).validate().is_err());
        assert!(cfg(&["lca", "--orders", "3,,4"]).validate().is_err());
        assert!(cfg(&["evolve", "--dt", "0"]).validate().is_err());
        assert_eq!(cfg(&["lca", "--orders", "3, 4"]).group().unwrap().orders(), &[3, 4]);
        assert!(RunConfig::try_parse_from(["wwmv", "star", "--twisted", "x"]).is_err());
    }

    #[test]
    fn run_maps_errors_to_codes() {
        let argv = |a: &[&str]| std::iter::once("wwmv").chain(a.iter().copied()).map(String::from).collect::<Vec<_>>();
        assert_eq!(run(argv(&["umklapp", "--orders", "8", "--steps", "10"])), 0);
        assert_eq!(run(argv(&["umklapp", "--orders", "2,2"])), 2);
        assert_eq!(run(argv(&["evolve"])), 2);
        assert_eq!(run(argv(&["nothing"])), 2);
    }
}
