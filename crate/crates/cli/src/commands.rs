//! Subcommand arguments and implementations.

use crate::error::CliError;
use crate::inputs::{parse_indices, parse_list, parse_stack, StackFile};
use crate::model::{self, Model};
use crate::report::{self, Diagnostics, Report};
use clap::{Args, Subcommand, ValueEnum};
use nalgebra::DVector;
use screwkin::chain::{jacobian_spatial, kinematic_map, link_pose};
use screwkin::dexterity::{condition_2norm, inv_condition_gradient, inverse_condition, manipulability_mu, mu_gradient, mu_hessian};
use screwkin::ik::ik_derivatives;
use screwkin::loop_solver::{loop_derivatives, loop_taylor_motion, CoordinateSplit, LoopOptions};
use screwkin::mobility::{assess_mobility, closure_algebra, tangent_cone_batch, ConeOptions};
use screwkin::representations::{convert_derivatives, twist_derivatives_in, RepTag};
use screwkin::taylor::{closure_residual, cspace_poly_system, km_differentials, km_taylor_eval};
use screwkin::{DerivativeStack, Execution, Tolerances};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pose of a link.
    Fk(FkArgs),
    /// Time derivatives of a link twist.
    Derivs(DerivsArgs),
    /// Closure-algebra mobility of the model's loops.
    Mobility(MobilityArgs),
    /// Higher-order tangent-cone membership of velocity vectors.
    Cone(ConeArgs),
    /// Joint derivatives from end-effector twist derivatives.
    Ik(IkArgs),
    /// Taylor approximation of a closed-loop motion.
    LoopApprox(LoopApproxArgs),
    /// Manipulability and conditioning with derivatives.
    Dexterity(DexterityArgs),
    /// Differentials and Taylor polynomial of the kinematic map.
    TaylorKm(TaylorKmArgs),
    /// Convert twist derivatives between representations.
    ConvertRep(ConvertRepArgs),
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Named configuration from the model file.
    #[arg(long)]
    pub config: Option<String>,
    /// Joint values, comma separated. Defaults to all zeros.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Rep {
    /// Spatial.
    S,
    /// Body-fixed.
    B,
    /// Hybrid.
    H,
}

impl Rep {
    fn tag(self, link: usize) -> RepTag {
        match self {
            Rep::S => RepTag::Spatial,
            Rep::B => RepTag::BodyFixed(link),
            Rep::H => RepTag::Hybrid(link),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Rep::S => "s",
            Rep::B => "b",
            Rep::H => "h",
        }
    }
}

#[derive(Args, Debug)]
pub struct FkArgs {
    #[command(flatten)]
    pub m: ModelArgs,
    /// One-based link index. Defaults to the last link.
    #[arg(long)]
    pub link: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DerivsArgs {
    #[command(flatten)]
    pub m: ModelArgs,
    /// Stack file with `derivs` (q̇, q̈, …) and optionally `q`.
    #[arg(long)]
    pub stack: PathBuf,
    /// Highest twist derivative to report.
    #[arg(long)]
    pub order: usize,
    #[arg(long, value_enum, default_value = "s")]
    pub rep: Rep,
    #[arg(long)]
    pub link: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MobilityArgs {
    #[command(flatten)]
    pub m: ModelArgs,
}

#[derive(Args, Debug)]
pub struct ConeArgs {
    #[command(flatten)]
    pub m: ModelArgs,
    /// Velocity vector, comma separated. Repeat to test several.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub x: Vec<String>,
    /// Highest order to certify.
    #[arg(long)]
    pub order: usize,
    /// Restrict to the stratum where the Jacobian rank is below this value.
    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Args, Debug)]
pub struct IkArgs {
    #[command(flatten)]
    pub m: ModelArgs,
    /// Stack file with `twists` (V, V̇, …) of the end effector.
    #[arg(long)]
    pub twists: PathBuf,
    /// Number of joint derivatives to solve for. Defaults to all available.
    #[arg(long)]
    pub order: Option<usize>,
    /// One-based task rows selecting a square system.
    #[arg(long)]
    pub rows: Option<String>,
}

#[derive(Args, Debug)]
pub struct LoopApproxArgs {
    #[command(flatten)]
    pub m: ModelArgs,
    /// One-based independent joint variables, comma separated.
    #[arg(long)]
    pub independent: String,
    /// Independent derivatives u̇;ü;… with components separated by commas.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "u_stack")]
    pub u: Option<String>,
    /// Stack file whose `derivs` hold the independent derivatives.
    #[arg(long)]
    pub u_stack: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: f64,
    /// Taylor order.
    #[arg(long)]
    pub order: usize,
    /// Solve each order in the least-squares sense.
    #[arg(long)]
    pub pseudo_inverse: bool,
}

#[derive(Args, Debug)]
pub struct DexterityArgs {
    #[command(flatten)]
    pub m: ModelArgs,
    /// Include gradients.
    #[arg(long)]
    pub grad: bool,
    /// Include the manipulability Hessian.
    #[arg(long)]
    pub hess: bool,
}

#[derive(Args, Debug)]
pub struct TaylorKmArgs {
    #[command(flatten)]
    pub m: ModelArgs,
    #[arg(long)]
    pub order: usize,
    /// Direction of the differentials, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Write the polynomial system of the truncated map to this file.
    #[arg(long)]
    pub emit_polys: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConvertRepArgs {
    #[command(flatten)]
    pub m: ModelArgs,
    /// Stack file with `twists` in the source representation.
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long, value_enum)]
    pub from: Rep,
    #[arg(long, value_enum)]
    pub to: Rep,
    #[arg(long)]
    pub link: Option<usize>,
}

struct Ctx {
    model: Model,
    path: String,
    q: DVector<f64>,
    diag: Diagnostics,
}

impl Ctx {
    fn open(a: &ModelArgs) -> Result<Self, CliError> {
        let model = model::load(&a.model)?;
        let q = match &a.q {
            Some(s) => Some(parse_list(s)?),
            None => None,
        };
        let q = model.resolve_config(a.config.as_deref(), q.as_deref())?;
        let mut diag = Diagnostics::default();
        for w in &model.warnings {
            diag.warn(w.clone());
        }
        Ok(Self { model, path: a.model.display().to_string(), q, diag })
    }

    fn link(&self, link: Option<usize>) -> Result<usize, CliError> {
        let i = link.unwrap_or(self.model.n());
        self.model.chain.check_link(i)?;
        Ok(i)
    }

    fn jacobian_condition(&mut self) -> Result<(), CliError> {
        let j = jacobian_spatial(&self.model.chain, &self.q, self.model.n())?;
        self.diag.effective_condition("jacobian", &j);
        Ok(())
    }

    fn finish(self, command: &'static str, inputs: Value, outputs: Value) -> Report {
        let mut inputs = inputs;
        inputs["q"] = report::vector(&self.q);
        Report {
            command,
            model: json!({
                "name": self.model.name,
                "path": self.path,
                "joints": self.model.variables.len(),
                "variables": self.model.n(),
                "loops": self.model.system.loops.len(),
            }),
            inputs,
            outputs,
            diagnostics: self.diag,
        }
    }
}

pub fn run(cmd: &Command, tol: &Tolerances) -> Result<Report, CliError> {
    match cmd {
        Command::Fk(a) => fk(a),
        Command::Derivs(a) => derivs(a),
        Command::Mobility(a) => mobility(a, tol),
        Command::Cone(a) => cone(a, tol),
        Command::Ik(a) => ik(a),
        Command::LoopApprox(a) => loop_approx(a, tol),
        Command::Dexterity(a) => dexterity(a),
        Command::TaylorKm(a) => taylor_km(a, tol),
        Command::ConvertRep(a) => convert_rep(a),
    }
}

fn fk(a: &FkArgs) -> Result<Report, CliError> {
    let ctx = Ctx::open(&a.m)?;
    let i = ctx.link(a.link)?;
    let pose = link_pose(&ctx.model.chain, &ctx.q, i)?;
    let f = kinematic_map(&ctx.model.chain, &ctx.q, i)?;
    let outputs = json!({
        "link": i,
        "pose": report::matrix4(&pose.to_matrix()),
        "kinematic_map": report::matrix4(&f.to_matrix()),
    });
    Ok(ctx.finish("fk", json!({"link": i}), outputs))
}

fn derivs(a: &DerivsArgs) -> Result<Report, CliError> {
    let mut ctx = Ctx::open(&a.m)?;
    let stack = StackFile::load(&a.stack)?;
    if let Some(q) = &stack.q {
        if a.m.q.is_some() || a.m.config.is_some() {
            return Err(CliError::input("the stack file sets q; drop --q/--config"));
        }
        ctx.model.check_len("stack q", q)?;
        ctx.q = DVector::from_column_slice(q);
    }
    let state = DerivativeStack::new(ctx.q.clone(), stack.derivs(ctx.model.n())?)?;
    let i = ctx.link(a.link)?;
    let d = twist_derivatives_in(&ctx.model.chain, &state, a.rep.tag(i), i, a.order)?;
    ctx.jacobian_condition()?;
    let inputs = json!({"order": a.order, "rep": a.rep.name(), "link": i, "derivs": report::vectors(&state.derivs)});
    let outputs = json!({"rep": a.rep.name(), "link": i, "derivatives": report::screws(&d)});
    Ok(ctx.finish("derivs", inputs, outputs))
}

fn mobility(a: &MobilityArgs, tol: &Tolerances) -> Result<Report, CliError> {
    let mut ctx = Ctx::open(&a.m)?;
    let sys = &ctx.model.system;
    let assessment = assess_mobility(sys, &ctx.q, tol.loop_closure)?;
    let mut loops = Vec::new();
    for (l, spec) in sys.loops.iter().enumerate() {
        let alg = closure_algebra(spec.chain.screws())?;
        let basis: Vec<Value> = (0..alg.g).map(|c| json!(alg.basis.column(c).iter().copied().collect::<Vec<_>>())).collect();
        loops.push(json!({
            "loop": l + 1,
            "variables": spec.indices,
            "g": alg.g,
            "closure_basis": basis,
            "bracket_residual": alg.bracket_residual(),
        }));
    }
    let jac = sys.jacobian(&ctx.q)?;
    ctx.diag.effective_condition("constraint_jacobian", &jac);
    let mut flags = Vec::new();
    if assessment.paradoxical_candidate {
        flags.push("paradoxical-candidate");
        ctx.diag.warn("structural mobility is not positive but the linkage is instantaneously mobile");
    }
    let outputs = json!({
        "loops": loops,
        "dof_sum": assessment.ckg.dof_sum,
        "g_total": assessment.ckg.g.iter().sum::<usize>(),
        "delta_str": assessment.ckg.delta,
        "instantaneous_mobility": assessment.instantaneous,
        "flags": flags,
    });
    Ok(ctx.finish("mobility", json!({}), outputs))
}

fn cone(a: &ConeArgs, tol: &Tolerances) -> Result<Report, CliError> {
    let mut ctx = Ctx::open(&a.m)?;
    let xs = a
        .x
        .iter()
        .map(|s| {
            let v = parse_list(s)?;
            ctx.model.check_len("--x", &v)?;
            Ok(DVector::from_vec(v))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let opts = ConeOptions { tol: tol.cone, tol_loop: tol.loop_closure, rank_stratum: a.rank };
    let results = tangent_cone_batch(&ctx.model.system, &ctx.q, &xs, a.order, &opts, Execution::Parallel);
    let mut out = Vec::with_capacity(xs.len());
    let mut kernel = None;
    for (k, (x, r)) in xs.iter().zip(results).enumerate() {
        let r = r?;
        if r.ill_conditioned {
            ctx.diag.warn(format!("x[{k}]: Jacobian rank decision is ill-conditioned"));
        }
        out.push(json!({
            "x": report::vector(x),
            "verdicts": r.verdicts.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
            "member_order": r.member_order(),
            "member": r.member_order() == a.order,
            "residuals": r.residuals,
            "tolerances": r.tolerances,
            "witness": report::vectors(&r.witness),
        }));
        kernel.get_or_insert_with(|| report::matrix(&r.kernel_basis.transpose()));
    }
    let inputs = json!({"x": report::vectors(&xs), "order": a.order, "rank": a.rank});
    let outputs = json!({"results": out, "kernel_basis": kernel.unwrap_or(Value::Array(vec![]))});
    Ok(ctx.finish("cone", inputs, outputs))
}

fn ik(a: &IkArgs) -> Result<Report, CliError> {
    let mut ctx = Ctx::open(&a.m)?;
    let twists = StackFile::load(&a.twists)?.twists()?;
    let k = a.order.unwrap_or(twists.len());
    if k > twists.len() {
        return Err(CliError::input(format!("--order {k} needs {k} twist derivatives, the file has {}", twists.len())));
    }
    let rows = a.rows.as_deref().map(parse_indices).transpose()?;
    let sol = ik_derivatives(&ctx.model.chain, &ctx.q, &twists[..k], rows.as_deref())?;
    ctx.jacobian_condition()?;
    let inputs = json!({"order": k, "rows": rows, "twists": report::screws(&twists[..k])});
    let outputs = json!({"qd": report::vectors(&sol.qd)});
    Ok(ctx.finish("ik", inputs, outputs))
}

fn loop_approx(a: &LoopApproxArgs, tol: &Tolerances) -> Result<Report, CliError> {
    let mut ctx = Ctx::open(&a.m)?;
    if !ctx.model.single_loop {
        return Err(CliError::input("loop-approx needs a single loop over all joints"));
    }
    if !a.dt.is_finite() {
        return Err(CliError::input("--dt must be finite"));
    }
    let n = ctx.model.n();
    let split = CoordinateSplit::from_independent(parse_indices(&a.independent)?, n)?;
    let raw = match (&a.u, &a.u_stack) {
        (Some(s), None) => parse_stack(s)?,
        (None, Some(p)) => StackFile::load(p)?.derivs.ok_or_else(|| CliError::input("u-stack file has no `derivs`"))?,
        _ => return Err(CliError::input("give the independent derivatives with --u or --u-stack")),
    };
    let m = split.delta();
    let u = raw
        .iter()
        .enumerate()
        .map(|(l, v)| {
            if v.len() == m {
                Ok(DVector::from_column_slice(v))
            } else {
                Err(CliError::input(format!("independent derivative {} has {} entries, expected {m}", l + 1, v.len())))
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if u.len() < a.order {
        return Err(CliError::input(format!("--order {} needs {} independent derivatives, got {}", a.order, a.order, u.len())));
    }
    let opts = LoopOptions { tol_loop: tol.loop_closure, cond_max: tol.cond, pseudo_inverse: a.pseudo_inverse };
    let chain = &ctx.model.chain;
    let st = loop_derivatives(chain, &ctx.q, &split, &u[..a.order], &opts)?;
    let q_approx = loop_taylor_motion(chain, &ctx.q, &split, &u, a.dt, a.order, &opts)?;
    let residual = closure_residual(chain, &q_approx)?;
    ctx.jacobian_condition()?;
    let inputs = json!({
        "independent": split.independent,
        "u": report::vectors(&u[..a.order]),
        "dt": a.dt,
        "order": a.order,
    });
    let outputs = json!({
        "dependent": split.dependent,
        "derivatives": report::vectors(&st.derivs),
        "q_approx": report::vector(&q_approx),
        "closure_residual": residual,
    });
    Ok(ctx.finish("loop-approx", inputs, outputs))
}

fn dexterity(a: &DexterityArgs) -> Result<Report, CliError> {
    let mut ctx = Ctx::open(&a.m)?;
    let chain = &ctx.model.chain;
    let j = jacobian_spatial(chain, &ctx.q, ctx.model.n())?;
    let mut outputs = json!({"manipulability": manipulability_mu(&j)?});
    match inverse_condition(chain, &ctx.q) {
        Ok(v) => outputs["inverse_condition"] = json!(v),
        Err(e) => ctx.diag.warn(format!("inverse condition number unavailable: {e}")),
    }
    if a.grad {
        outputs["manipulability_gradient"] = report::vector(&mu_gradient(chain, &ctx.q)?);
        outputs["inverse_condition_gradient"] = report::vector(&inv_condition_gradient(chain, &ctx.q)?);
    }
    if a.hess {
        outputs["manipulability_hessian"] = report::matrix(&mu_hessian(chain, &ctx.q)?);
    }
    ctx.diag.effective_condition("jacobian", &j);
    ctx.diag.condition("jjt", condition_2norm(&j));
    Ok(ctx.finish("dexterity", json!({"grad": a.grad, "hess": a.hess}), outputs))
}

fn taylor_km(a: &TaylorKmArgs, tol: &Tolerances) -> Result<Report, CliError> {
    let ctx = Ctx::open(&a.m)?;
    if a.x.is_none() && a.emit_polys.is_none() {
        return Err(CliError::input("give --x, --emit-polys or both"));
    }
    let chain = &ctx.model.chain;
    let mut outputs = json!({"closure_residual": closure_residual(chain, &ctx.q)?});
    let mut inputs = json!({"order": a.order});
    if let Some(s) = &a.x {
        let x = parse_list(s)?;
        ctx.model.check_len("--x", &x)?;
        let x = DVector::from_vec(x);
        let d = km_differentials(chain, &ctx.q, a.order, &x)?;
        outputs["differentials"] = Value::Array(d.f.iter().map(report::matrix4).collect());
        outputs["taylor_sum"] = report::matrix4(&km_taylor_eval(chain, &ctx.q, a.order, &x)?);
        inputs["x"] = report::vector(&x);
    }
    if let Some(path) = &a.emit_polys {
        let sys = cspace_poly_system(chain, &ctx.q, a.order, tol.loop_closure)?;
        std::fs::write(path, sys.to_text()).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
        outputs["polynomials"] = json!({
            "path": path.display().to_string(),
            "equations": sys.equations.len(),
            "variables": sys.variables,
        });
    }
    Ok(ctx.finish("taylor-km", inputs, outputs))
}

fn convert_rep(a: &ConvertRepArgs) -> Result<Report, CliError> {
    let ctx = Ctx::open(&a.m)?;
    let twists = StackFile::load(&a.stack)?.twists()?;
    let i = ctx.link(a.link)?;
    let pose = link_pose(&ctx.model.chain, &ctx.q, i)?;
    let out = convert_derivatives(&twists, Some(&pose), a.from.tag(i), a.to.tag(i))?;
    let inputs = json!({"from": a.from.name(), "to": a.to.name(), "link": i, "twists": report::screws(&twists)});
    let outputs = json!({"rep": a.to.name(), "link": i, "derivatives": report::screws(&out)});
    Ok(ctx.finish("convert-rep", inputs, outputs))
}
