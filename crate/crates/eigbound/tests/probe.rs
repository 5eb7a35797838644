//! Temporary diagnostic: decompose the eigenvalue error identity for one pair.

use eigbound::basis::generate_alb;
use eigbound::constants::compute_constants;
use eigbound::dg::{assemble, evaluate_bilinear, solve_eig};
use eigbound::fields::{inner_domain, l2_norm_domain, GridFunction};
use eigbound::mesh::{build_partition, build_quadrature};
use eigbound::report::{align, measure_errors};
use eigbound::run::RunConfig;
use eigbound::spectral::{sample_on_quad, solve_reference};

#[test]
fn decompose_identity_pair_10() {
    let config = RunConfig::preset_1d().unwrap();
    let spec = config.potential_spec().unwrap();
    let partition = build_partition(&config.domain.lengths, &config.domain.elements).unwrap();
    let quad = build_quadrature(&partition, config.quadrature.order).unwrap();
    let vgrid = sample_on_quad(&spec, &partition, &quad).unwrap();
    let basis = generate_alb(
        &partition,
        &quad,
        &spec,
        config.basis.per_element,
        config.basis.wavecount,
        config.basis.drop_tol,
    )
    .unwrap();
    let table = compute_constants(
        &partition,
        &quad,
        &basis,
        config.theta,
        Some(config.quadrature.p_fine),
    )
    .unwrap();
    let op = assemble(&partition, &quad, &basis, &vgrid, &table, config.theta).unwrap();
    let sol = solve_eig(&partition, &quad, &basis, &op, config.pairs).unwrap();
    let reference = solve_reference(
        &spec,
        &partition,
        &quad,
        config.reference.wavecount,
        config.pairs,
    )
    .unwrap();
    let solution = align(&quad, &sol, &reference).unwrap();
    let comparison =
        measure_errors(&partition, &quad, &solution, &reference, &table, &vgrid).unwrap();

    let i = 9; // pair 10
    let lam = reference.eigenvalues[i];
    let lam_n = solution.eigenvalues[i];
    let u = &reference.fields[i];
    let un = &solution.fields[i];
    let e = GridFunction::linear_combination(&[(1.0, u), (-1.0, un)]).unwrap();

    let theta = config.theta;
    let a_uu = evaluate_bilinear(&partition, &quad, u, u, &table, theta, &vgrid).unwrap();
    let a_unun = evaluate_bilinear(&partition, &quad, un, un, &table, theta, &vgrid).unwrap();
    let a_u_un = evaluate_bilinear(&partition, &quad, u, un, &table, theta, &vgrid).unwrap();
    let a_ee = evaluate_bilinear(&partition, &quad, &e, &e, &table, theta, &vgrid).unwrap();

    let uu = l2_norm_domain(&quad, u);
    let unun = l2_norm_domain(&quad, un);
    let ip = inner_domain(&quad, u, un);
    let ee = l2_norm_domain(&quad, &e);
    let l2_sq = comparison.errors[i].l2_err_sq;

    println!("lambda_ref      = {lam:.12e}");
    println!("lambda_dg       = {lam_n:.12e}");
    println!("a(u,u) - lam    = {:.6e}", a_uu - lam);
    println!("a(uN,uN) - lamN = {:.6e}", a_unun - lam_n);
    println!("a(u,uN)-lam*ip  = {:.6e}", a_u_un - lam * ip);
    println!("|u|^2 - 1       = {:.6e}", uu * uu - 1.0);
    println!("|uN|^2 - 1      = {:.6e}", unun * unun - 1.0);
    println!("|e|^2 grid      = {:.12e}", ee * ee);
    println!("|e|^2 measured  = {:.12e}", l2_sq);
    println!(
        "a(e,e) vs split = {:.6e}",
        a_ee - (a_uu - 2.0 * a_u_un + a_unun)
    );
    let predicted = lam_n - lam + lam * ee * ee;
    println!("defect(grid e)  = {:.6e}", (a_ee - predicted).abs());
    let predicted_m = lam_n - lam + lam * l2_sq;
    println!("defect(measured)= {:.6e}", (a_ee - predicted_m).abs());
}
