//! Command implementations. Each returns the rendered JSON report, a text
//! summary, and the process exit code; `main` decides what to print and
//! where to write.

use serde::Serialize;

use kaplansky_core::pie::{
    build_operator, check_solvable, hs_check, kernel_asymmetry, kernel_spectrum, solve_pie,
    Solvability,
};
use kaplansky_core::vna::{diagonalize, to_diagonal_matrix};
use kaplansky_core::SELF_ADJOINT_RTOL;

use crate::error::CliError;
use crate::report::{
    element_to_pairs, mask_to_vec, AsymmetryLocation, CentralFile, DiagonalizeReport, SolveReport,
    SpectralFile, ValidateReport,
};
use crate::run::RunConfig;
use crate::schema::{
    read_decompose_input, read_kernel, read_step_function, DecomposeInput, KernelFile, SCHEMA_TAG,
};

pub struct CmdOutcome {
    pub report_json: String,
    pub text: String,
    pub code: i32,
}

fn render<T: Serialize>(report: &T) -> Result<String, CliError> {
    let mut json =
        serde_json::to_string_pretty(report).map_err(|e| CliError::Domain(e.to_string()))?;
    json.push('\n');
    Ok(json)
}

/// Schema check, self-adjointness check, and Hilbert–Schmidt weights.
pub fn cmd_validate(input: &str, config: &RunConfig) -> Result<CmdOutcome, CliError> {
    let file: KernelFile = read_kernel(input)?;
    if file.schema != SCHEMA_TAG {
        return Err(CliError::parse(format!(
            "unsupported schema tag {:?}, expected {SCHEMA_TAG:?}",
            file.schema
        )));
    }
    let space = file.space.to_core()?;
    let grid = file.grid.to_core()?;
    let dim = grid.len();
    let samples = file.sample_matrices()?;

    let scale = samples
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.norm()));
    let asymmetry = kernel_asymmetry(&samples, dim);
    let max_asymmetry = asymmetry.as_ref().map_or(0.0, |a| a.value);
    let symmetric_enough =
        !file.selfadjoint || max_asymmetry <= SELF_ADJOINT_RTOL * scale.max(1e-300);

    // HS weights of the raw samples; admissibility is finiteness plus, for
    // flagged kernels, the symmetry bound.
    let raw = kaplansky_core::pie::KernelBundle::new(space, grid, false, &samples)
        .map_err(CliError::domain)?;
    let hs = hs_check(&raw).map_err(CliError::domain)?;
    let hs_values: Vec<f64> = hs.values().iter().map(|v| v.re).collect();
    let hs_sup = hs.max_abs();

    let report = ValidateReport {
        schema: SCHEMA_TAG.to_string(),
        config: config.clone(),
        ok: symmetric_enough,
        selfadjoint: file.selfadjoint,
        max_asymmetry,
        asymmetry_location: if symmetric_enough {
            None
        } else {
            asymmetry.map(|a| AsymmetryLocation {
                atom: a.atom,
                row: a.row,
                col: a.col,
            })
        },
        hs_values,
        hs_sup,
    };

    let mut text = String::new();
    text.push_str(&format!(
        "selfadjoint flag: {}\nmax asymmetry: {}\n",
        file.selfadjoint, max_asymmetry
    ));
    if let Some(location) = &report.asymmetry_location {
        text.push_str(&format!(
            "worst asymmetry at atom {}, entry ({}, {})\n",
            location.atom, location.row, location.col
        ));
    }
    text.push_str(&format!("hs sup: {}\n", hs_sup));
    text.push_str(if report.ok { "ok\n" } else { "FAILED\n" });

    Ok(CmdOutcome {
        report_json: render(&report)?,
        text,
        code: if report.ok { 0 } else { 1 },
    })
}

/// Spectral form of a kernel, or central diagonal form of a matrix field.
pub fn cmd_decompose(input: &str, config: &RunConfig) -> Result<CmdOutcome, CliError> {
    match read_decompose_input(input)? {
        DecomposeInput::Kernel(file) => {
            let kernel = file.to_core()?;
            let spectrum = kernel_spectrum(&kernel, config.rank_tol)?;
            let module = kernel.module();
            let op = build_operator(&kernel)?;
            let back = spectrum.reconstruct(&module)?;
            let residual = module.operator_norm(&back.sub(&op))?;
            let report = SpectralFile::new(&spectrum, config, residual);
            let mut text = format!("spectral decomposition: {} classes\n", report.classes.len());
            text.push_str(&format!(
                "zero class atoms: {}\n",
                spectrum.zero_mask.count()
            ));
            for class in &report.classes {
                text.push_str(&format!(
                    "class k={}: {} atoms\n",
                    class.k, class.atom_count
                ));
            }
            text.push_str(&format!("reconstruction residual: {}\n", residual));
            Ok(CmdOutcome {
                report_json: render(&report)?,
                text,
                code: 0,
            })
        }
        DecomposeInput::MatrixField(file) => {
            let field = file.to_core()?;
            let form = diagonalize(&field, config.rank_tol)?;
            let residual = form.reconstruct().sub(&field).operator_norm()?;
            let report = CentralFile::new(&form, config, residual);
            let mut text = format!("central diagonal form: {} classes\n", report.classes.len());
            text.push_str(&format!("zero class atoms: {}\n", form.zero_mask.count()));
            for class in &report.classes {
                text.push_str(&format!(
                    "class k={}: {} atoms\n",
                    class.k, class.atom_count
                ));
            }
            text.push_str(&format!("reconstruction residual: {}\n", residual));
            Ok(CmdOutcome {
                report_json: render(&report)?,
                text,
                code: 0,
            })
        }
    }
}

/// Solvability of `T f = λ f` with witness extraction.
pub fn cmd_solve(
    kernel_input: &str,
    lambda_input: &str,
    config: &RunConfig,
) -> Result<CmdOutcome, CliError> {
    let kernel = read_kernel(kernel_input)?.to_core()?;
    let lambda = read_step_function(lambda_input)?.to_core()?;
    let outcome = check_solvable(&kernel, &lambda, config.solve_tol, config.rank_tol)?;
    match outcome {
        Solvability::Solvable(_) => {
            let solution = solve_pie(&kernel, &lambda, config.solve_tol, config.rank_tol)?;
            let witness = &solution.witness;
            let report = SolveReport {
                schema: SCHEMA_TAG.to_string(),
                config: config.clone(),
                solvable: true,
                pi: mask_to_vec(&witness.pi),
                branch: Some([witness.branch.0, witness.branch.1]),
                max_gap: witness.max_gap,
                residual: Some(solution.residual),
                eigenfunction: Some(element_to_pairs(&witness.eigenfunction)),
            };
            let text = format!(
                "solvable: branch (k={}, n={}), {} of {} atoms, max gap {}, residual {}\n",
                witness.branch.0,
                witness.branch.1,
                witness.pi.count(),
                witness.pi.len(),
                witness.max_gap,
                solution.residual
            );
            Ok(CmdOutcome {
                report_json: render(&report)?,
                text,
                code: 0,
            })
        }
        Solvability::NotSolvable { min_gap } => {
            let report = SolveReport {
                schema: SCHEMA_TAG.to_string(),
                config: config.clone(),
                solvable: false,
                pi: vec![false; kernel.atoms()],
                branch: None,
                max_gap: min_gap,
                residual: None,
                eigenfunction: None,
            };
            let text = format!("not solvable: smallest branch gap {}\n", min_gap);
            Ok(CmdOutcome {
                report_json: render(&report)?,
                text,
                code: 3,
            })
        }
    }
}

/// Diagonal representation `U* x U = D` of a self-adjoint matrix field.
pub fn cmd_diagonalize(input: &str, config: &RunConfig) -> Result<CmdOutcome, CliError> {
    let field = crate::schema::read_matrix_field(input)?.to_core()?;
    let form = diagonalize(&field, config.rank_tol)?;
    let diagonal_form = to_diagonal_matrix(&form).map_err(CliError::domain)?;
    let conjugated = diagonal_form
        .unitary
        .adjoint()
        .mul(&field)
        .mul(&diagonal_form.unitary);
    let residual = conjugated.sub(&diagonal_form.diagonal).operator_norm()?;
    let report = DiagonalizeReport::new(
        &form,
        &diagonal_form.unitary,
        &diagonal_form.diagonal,
        config,
        residual,
    );
    let mut text = format!("diagonalized: {} classes\n", report.classes.len());
    for class in &report.classes {
        text.push_str(&format!(
            "class k={}: {} atoms\n",
            class.k, class.atom_count
        ));
    }
    text.push_str(&format!("conjugation residual: {}\n", residual));
    Ok(CmdOutcome {
        report_json: render(&report)?,
        text,
        code: 0,
    })
}
