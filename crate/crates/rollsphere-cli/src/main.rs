//! Command-line driver: thin wrappers around the library. No numerics live
//! here beyond assembling reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rollsphere::connection::certificate_grid;
use rollsphere::geometry::{axis_angle, Mat3};
use rollsphere::holonomy::{
    rect_loop_control, rect_loop_control_xy, rotational_holonomy_numeric,
    rotational_holonomy_rect, translational_holonomy_numeric, translational_holonomy_rect,
    translational_holonomy_rect_diag, RectLoopDiag, RectLoopXY,
};
use rollsphere::io::{load_params, write_ocp_trajectory, write_trajectory, OcpSample};
use rollsphere::kinematics::{integrate, psi, Pose, RobotParams, ShapeState, Vec2};
use rollsphere::optimal_control::{
    exact_solution, integrate_pmp, optimal_control_law, reconstruct_by_quadrature, solve_bvp,
    time_branch_sign, Angles, BvpOptions, PMPState, ReducedConstants,
};

/// Accepts plain floats and `pi`-suffixed multiples (`7pi`, `-1.5pi`, `pi`)
/// so angle arguments avoid decimal truncation.
fn parse_pi(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Some(prefix) = t.strip_suffix("pi") {
        let coef = match prefix.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other
                .parse::<f64>()
                .map_err(|e| format!("invalid multiple of pi {t:?}: {e}"))?,
        };
        Ok(coef * std::f64::consts::PI)
    } else {
        t.parse::<f64>().map_err(|e| format!("invalid number {t:?}: {e}"))
    }
}

/// `a,b` pair, each component `pi`-aware.
#[derive(Debug, Clone, Copy)]
struct Pair(f64, f64);

fn parse_pair(s: &str) -> Result<Pair, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated values, got {s:?}"));
    }
    Ok(Pair(parse_pi(parts[0])?, parse_pi(parts[1])?))
}

/// `g1,g2,p1,p2` quadruple for the shooting guess.
#[derive(Debug, Clone, Copy)]
struct Quad([f64; 4]);

fn parse_quad(s: &str) -> Result<Quad, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected four comma-separated values, got {s:?}"));
    }
    let mut out = [0.0; 4];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = parse_pi(part)?;
    }
    Ok(Quad(out))
}

#[derive(Parser)]
#[command(
    name = "rollsphere",
    version,
    about = "Geometric kinematic control of a two-wheel-driven spherical rolling robot"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the rolling kinematics under constant wheel rates.
    Simulate(SimulateArgs),
    /// Closed-form holonomy of rectangular shape-space loops, with optional
    /// numeric cross-checks.
    #[command(subcommand)]
    Holonomy(HolonomyCommand),
    /// Fiber controllability certificate on a grid over one shape period.
    Controllability(ControllabilityArgs),
    /// Minimum-energy optimal control between boundary configurations.
    Ocp(OcpArgs),
}

#[derive(Args)]
struct ParamsArg {
    /// Parameter file (key = value; keys r, rho, h, w, j_ratio). Defaults
    /// to r = 1, rho = 0.3, h = 0.75, w = 0.8, j_ratio = 5.
    #[arg(long)]
    params: Option<PathBuf>,
}

impl ParamsArg {
    fn load(&self) -> rollsphere::Result<RobotParams> {
        match &self.params {
            Some(path) => load_params(path),
            None => RobotParams::new(1.0, 0.3, 0.75, 0.8, 5.0),
        }
    }
}

fn echo_params(p: &RobotParams) {
    println!(
        "params: r = {}, rho = {}, h = {}, w = {}, j_ratio = {}",
        p.r, p.rho, p.h, p.w, p.j_ratio
    );
    println!("derived: c = {}", p.c());
}

fn print_matrix(label: &str, m: &Mat3) {
    println!("{label}:");
    for i in 0..3 {
        println!("  [{:+.12e}, {:+.12e}, {:+.12e}]", m[(i, 0)], m[(i, 1)], m[(i, 2)]);
    }
}

fn print_axis_angle(r: &Mat3) {
    let (axis, angle) = axis_angle(r);
    println!(
        "axis-angle: axis = ({:+.12e}, {:+.12e}, {:+.12e}), angle = {:.12e} rad",
        axis.x, axis.y, axis.z, angle
    );
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Wheel 1 rate (rad/s).
    #[arg(long, value_parser = parse_pi)]
    u1: f64,
    /// Wheel 2 rate (rad/s).
    #[arg(long, value_parser = parse_pi)]
    u2: f64,
    /// Final time.
    #[arg(long = "T", value_parser = parse_pi)]
    t_final: f64,
    /// Integration step.
    #[arg(long, default_value = "1e-3", value_parser = parse_pi)]
    dt: f64,
    /// Trajectory CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_simulate(args: &SimulateArgs) -> rollsphere::Result<()> {
    let p = args.params.load()?;
    println!("command: simulate");
    echo_params(&p);
    println!("u = ({}, {}), T = {}, dt = {}", args.u1, args.u2, args.t_final, args.dt);
    let traj = integrate(
        &p,
        (ShapeState::new(0.0, 0.0), Pose::identity()),
        |_| (args.u1, args.u2),
        args.t_final,
        args.dt,
    )?;
    let last = traj.last().expect("non-empty trajectory");
    println!("samples: {}", traj.samples.len());
    println!("final shape: phi1 = {:.12e}, phi2 = {:.12e}", last.shape.phi1, last.shape.phi2);
    println!("final psi: {:.12e}", psi(&p, &last.shape));
    println!("final x: ({:+.12e}, {:+.12e})", last.pose.x.x, last.pose.x.y);
    print_matrix("final R", &last.pose.r);
    let defect = (last.pose.r.transpose() * last.pose.r - Mat3::identity()).norm();
    println!("orthogonality defect: {:.3e}", defect);
    if let Some(out) = &args.out {
        write_trajectory(&traj, out)?;
        println!("wrote: {}", out.display());
    }
    Ok(())
}

#[derive(Args)]
struct LoopArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// First side length (radians; accepts `7pi`).
    #[arg(long, value_parser = parse_pi)]
    alpha: f64,
    /// Second side length (radians).
    #[arg(long, value_parser = parse_pi)]
    beta: f64,
    /// Also integrate the loop numerically with this step and report the
    /// deviation from the closed forms.
    #[arg(long, value_name = "DT", value_parser = parse_pi)]
    numeric: Option<f64>,
}

#[derive(Subcommand)]
enum HolonomyCommand {
    /// Axis-aligned rectangle [0, alpha] x [0, beta] in (phi1, phi2),
    /// counterclockwise from the origin.
    RectXy(LoopArgs),
    /// Rectangle with legs alpha, beta axis-aligned in the rotated
    /// coordinates (phi1 + phi2, phi1 - phi2).
    RectDiag(LoopArgs),
}

fn run_holonomy(cmd: &HolonomyCommand) -> rollsphere::Result<()> {
    match cmd {
        HolonomyCommand::RectXy(args) => {
            let p = args.params.load()?;
            println!("command: holonomy rect-xy");
            echo_params(&p);
            println!("alpha = {}, beta = {}", args.alpha, args.beta);
            let lp = RectLoopXY::new(args.alpha, args.beta)?;
            let dx = translational_holonomy_rect(&p, &lp);
            println!("translational holonomy (closed form): ({:+.8}, {:+.8})", dx.x, dx.y);
            if let Some(dt) = args.numeric {
                let control = rect_loop_control_xy(&lp);
                let dx_num = translational_holonomy_numeric(&p, &control, dt)?;
                let r_num = rotational_holonomy_numeric(&p, &control, dt)?;
                println!(
                    "translational holonomy (numeric, dt = {dt}): ({:+.8}, {:+.8})",
                    dx_num.x, dx_num.y
                );
                println!("closed vs numeric: {:.3e}", (dx - dx_num).norm());
                print_matrix("rotational holonomy (numeric)", &r_num);
                print_axis_angle(&r_num);
            }
        }
        HolonomyCommand::RectDiag(args) => {
            let p = args.params.load()?;
            println!("command: holonomy rect-diag");
            echo_params(&p);
            println!("alpha = {}, beta = {}", args.alpha, args.beta);
            let lp = RectLoopDiag::new(args.alpha, args.beta)?;
            let dx = translational_holonomy_rect_diag(&p, &lp);
            println!("translational holonomy (closed form): ({:+.8}, {:+.8})", dx.x, dx.y);
            let r = rotational_holonomy_rect(&p, &lp);
            print_matrix("rotational holonomy (closed form)", &r);
            print_axis_angle(&r);
            if let Some(dt) = args.numeric {
                let control = rect_loop_control(&lp);
                let dx_num = translational_holonomy_numeric(&p, &control, dt)?;
                let r_num = rotational_holonomy_numeric(&p, &control, dt)?;
                println!(
                    "translational holonomy (numeric, dt = {dt}): ({:+.8}, {:+.8})",
                    dx_num.x, dx_num.y
                );
                println!("closed vs numeric (translation): {:.3e}", (dx - dx_num).norm());
                println!("closed vs numeric (rotation, Frobenius): {:.3e}", (r - r_num).norm());
            }
        }
    }
    Ok(())
}

#[derive(Args)]
struct ControllabilityArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Grid resolution per axis over one period of Delta = phi1 - phi2.
    #[arg(long, default_value = "100")]
    grid: usize,
}

fn run_controllability(args: &ControllabilityArgs) -> rollsphere::Result<()> {
    let p = args.params.load()?;
    println!("command: controllability");
    echo_params(&p);
    let cert = certificate_grid(&p, args.grid);
    println!("grid: {0} x {0}", cert.grid);
    println!("fiber controllable everywhere: {}", cert.all_controllable);
    println!("min relevant singular value: {:.12e}", cert.min_sv);
    println!("max relevant singular value: {:.12e}", cert.max_sv);
    Ok(())
}

#[derive(Args)]
struct OcpArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Initial center position `x1,x2`.
    #[arg(long, default_value = "0,0", value_parser = parse_pair, allow_hyphen_values = true)]
    x0: Pair,
    /// Initial wheel angles `phi1,phi2`.
    #[arg(long, default_value = "0,0", value_parser = parse_pair, allow_hyphen_values = true)]
    phi0: Pair,
    /// Target center position `x1,x2`.
    #[arg(long, default_value = "1,1", value_parser = parse_pair, allow_hyphen_values = true)]
    xt: Pair,
    /// Target wheel angles `phi1,phi2` (accepts `10pi,10pi`).
    #[arg(long, default_value = "10pi,10pi", value_parser = parse_pair, allow_hyphen_values = true)]
    phit: Pair,
    /// Time horizon.
    #[arg(long = "T", default_value = "10", value_parser = parse_pi)]
    t_final: f64,
    /// Shooting integration step.
    #[arg(long, default_value = "1e-3", value_parser = parse_pi)]
    dt: f64,
    /// Seed for the restart sampler.
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Number of random restarts after the guess and the origin.
    #[arg(long, default_value = "32")]
    restarts: usize,
    /// Newton iteration cap per start.
    #[arg(long, default_value = "100")]
    max_iters: usize,
    /// Convergence tolerance on the boundary residual.
    #[arg(long, default_value = "1e-8")]
    tol: f64,
    /// Optional initial costates `gamma1,gamma2,p1,p2`.
    #[arg(long, value_parser = parse_quad, allow_hyphen_values = true)]
    guess: Option<Quad>,
    /// Evaluate the elliptic closed-form solution where the branch permits
    /// and report its agreement with the integrated extremal.
    #[arg(long)]
    exact: bool,
    /// Solution trajectory CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_ocp(args: &OcpArgs) -> rollsphere::Result<()> {
    let p = args.params.load()?;
    println!("command: ocp");
    echo_params(&p);
    println!(
        "boundary: x {:?} -> {:?}, phi {:?} -> {:?}, T = {}",
        (args.x0.0, args.x0.1),
        (args.xt.0, args.xt.1),
        (args.phi0.0, args.phi0.1),
        (args.phit.0, args.phit.1),
        args.t_final
    );
    println!(
        "shooting: dt = {}, restarts = {}, seed = {}, tol = {:e}",
        args.dt, args.restarts, args.seed, args.tol
    );
    let options = BvpOptions {
        dt: args.dt,
        max_iters: args.max_iters,
        restarts: args.restarts,
        seed: args.seed,
        tol: args.tol,
        guess: args.guess.map(|q| q.0),
    };
    let phi0 = ShapeState::new(args.phi0.0, args.phi0.1);
    let sol = solve_bvp(
        &p,
        phi0,
        Vec2::new(args.x0.0, args.x0.1),
        ShapeState::new(args.phit.0, args.phit.1),
        Vec2::new(args.xt.0, args.xt.1),
        args.t_final,
        &options,
    )?;
    println!("distinct converged extremals: {}", sol.candidates);
    println!("boundary residual: {:.3e}", sol.residual);
    println!("cost: {:.12e}", sol.cost);
    let s0 = sol.state0;
    println!(
        "initial costates: gamma = ({:+.8e}, {:+.8e}), p = ({:+.8e}, {:+.8e})",
        s0.gamma1, s0.gamma2, s0.p.x, s0.p.y
    );
    let f = sol.first_integrals;
    println!(
        "first integrals: H = {:.12e}, gamma1+gamma2 = {:.12e}, p = ({:.12e}, {:.12e})",
        f[0], f[1], f[2], f[3]
    );
    let b = sol.branch;
    println!(
        "branch: A = {:.6e}, E = {:.6e}, A < E: {}, positivity = {:.6e}, exact closed form applicable: {}",
        b.a_big, b.e_big, b.oscillatory, b.positivity, b.exact_applicable
    );
    if args.exact {
        report_exact(&p, &s0, args.t_final, args.dt);
    }
    if let Some(out) = &args.out {
        let samples = ocp_samples(&p, &s0, args.t_final, args.dt)?;
        write_ocp_trajectory(&samples, out)?;
        println!("wrote: {}", out.display());
    }
    Ok(())
}

/// Runs the elliptic closed form on the solved extremal when its branch
/// conditions hold and reports the deviation of the quadrature
/// reconstruction from the integrated flow.
fn report_exact(p: &RobotParams, s0: &PMPState, t_final: f64, dt: f64) {
    let k = ReducedConstants::from_state(p, s0);
    let angles = match Angles::from_state(p, s0) {
        Ok(a) => a,
        Err(e) => {
            println!("exact route: not applicable ({e})");
            return;
        }
    };
    let delta = s0.costate().delta();
    let sign = time_branch_sign(p, s0);
    let theta = |t: f64| exact_solution(p, &k, delta, angles.theta, sign, t).map(|v| v.0);
    let reconstruct = theta(0.0).and_then(|_| {
        reconstruct_by_quadrature(p, theta, &k, s0.x, s0.shape(), t_final, dt)
    });
    match reconstruct {
        Ok(samples) => {
            let ode = integrate_pmp(p, s0, t_final, dt).expect("step validated");
            let mut worst: f64 = 0.0;
            for ((_, shape, x), (_, state)) in samples.iter().zip(&ode.samples) {
                worst = worst
                    .max((shape.phi1 - state.phi1).abs())
                    .max((shape.phi2 - state.phi2).abs())
                    .max((x - state.x).norm());
            }
            let (_, shape_end, x_end) = samples.last().expect("non-empty");
            println!(
                "exact route: phi(T) = ({:.8e}, {:.8e}), x(T) = ({:.8e}, {:.8e})",
                shape_end.phi1, shape_end.phi2, x_end.x, x_end.y
            );
            println!("exact route: max deviation from integrated extremal = {worst:.3e}");
        }
        Err(e) => println!("exact route: not applicable ({e})"),
    }
}

/// Rebuilds the full configuration trajectory of the solved extremal: the
/// PMP flow provides shape, center, and costates on a half-step grid; the
/// sphere orientation is integrated by the kinematics under the optimal
/// control read off that grid.
fn ocp_samples(
    p: &RobotParams,
    state0: &PMPState,
    t_final: f64,
    dt: f64,
) -> rollsphere::Result<Vec<OcpSample>> {
    let half = 0.5 * dt;
    let dense = integrate_pmp(p, state0, t_final, half)?;
    let lookup = |t: f64| {
        let idx = ((t / half).round() as usize).min(dense.samples.len() - 1);
        dense.samples[idx].1
    };
    let control = |t: f64| {
        let s = lookup(t);
        optimal_control_law(p, &s.shape(), &s.costate())
    };
    let pose0 = Pose { r: Mat3::identity(), x: state0.x };
    let traj = integrate(p, (state0.shape(), pose0), control, t_final, dt)?;
    Ok(traj
        .samples
        .iter()
        .map(|sample| {
            let pmp = lookup(sample.t);
            OcpSample {
                t: sample.t,
                shape: sample.shape,
                pose: sample.pose,
                gamma1: pmp.gamma1,
                gamma2: pmp.gamma2,
                p: pmp.p,
            }
        })
        .collect())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Holonomy(cmd) => run_holonomy(cmd),
        Command::Controllability(args) => run_controllability(args),
        Command::Ocp(args) => run_ocp(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
