// temporary probe: convergence order of the trapping solve (deleted before ship)
use nltorsion::geometry::{build_mask, Domain2D};
use nltorsion::pde2d::solve_nonlinear;
use nltorsion::radial::solve_radial;
use std::sync::Arc;

fn main() {
    let disk = Domain2D::disk(1.0).unwrap();
    let oracle = solve_radial(2, 1.0, 1.0, 8192).unwrap();
    let mut errs = Vec::new();
    for &h in &[1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let mask = Arc::new(build_mask(&disk, h).unwrap());
        let (u, _) = match solve_nonlinear(&mask, 1.0, 1e-10) { Ok(v) => v, Err(e) => { println!("h={h:.6}: ERROR {e}"); continue; } };
        let mut sup = 0.0f64;
        for k in 0..mask.n_interior() {
            let (x, y) = mask.position(k);
            sup = sup.max((u.value(k) - oracle.value_at(x.hypot(y))).abs());
        }
        println!("h={h:.6}: sup error {sup:.4e}  center err {:.3e}",
            (u.value_at(0.0,0.0).unwrap() - oracle.center_value()).abs());
        errs.push(sup);
    }
    println!("orders: {:.3} {:.3}", (errs[0]/errs[1]).log2(), (errs[1]/errs[2]).log2());
}
