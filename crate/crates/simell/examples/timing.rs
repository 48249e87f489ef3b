use simell::family::Family;
use simell::hypergeom::build_periods;
use simell::mirror::build_mirror;
use simell::series::Exp;
use std::time::Instant;

fn main() {
    let ord = Exp::from_integer(204);
    let t0 = Instant::now();
    let p = build_periods(Family::P8, ord + Exp::from_integer(6));
    println!("periods: {:?}", t0.elapsed());
    let t1 = Instant::now();
    let m = build_mirror(&p, ord + Exp::from_integer(4)).unwrap();
    println!("mirror (incl revert): {:?}", t1.elapsed());
    let t2 = Instant::now();
    let s = m
        .substitute_u_series(&p.pi_a.scale(&-&simell::coeffs::Cyclotomic::i()))
        .unwrap();
    println!("substitute: {:?} ({} terms)", t2.elapsed(), s.num_terms());
    let t3 = Instant::now();
    let eta = simell::frobenius::saito_eta_product(Exp::from_integer(200)).unwrap();
    println!("eta product: {:?} ({} terms)", t3.elapsed(), eta.num_terms());
}
