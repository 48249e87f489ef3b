#[test]
fn probe_identity_r() {
    use simell::givental::fock::*;
    use simell::givental::matrices::{Mat, ZMatrix};
    use simell::givental::mpoly::RatFn;
    use simell::coeffs::rat;
    let mut f = TruncatedPotential::new(1, 2, 4, 8);
    f.set_term(0, vec![((0, 0), 4)], RatFn::constant_rat(rat(1, 24)));
    f.set_term(1, vec![((0, 0), 1)], RatFn::constant_rat(rat(1, 24)));
    f.set_term(1, vec![((0, 0), 1), ((1, 0), 1)], RatFn::constant_rat(rat(1, 2)));
    f.set_term(2, vec![], RatFn::constant_rat(rat(7, 5760)));
    f.set_term(2, vec![((3, 0), 1)], RatFn::constant_rat(rat(1, 1152)));
    let mut m = Mat::zero(1);
    m.e[0][0] = RatFn::one();
    let r = ZMatrix::from_parts(vec![(0, m)]);
    let (g, rep) = apply_r_hat(&r, &[0], &f).unwrap();
    println!("dropped = {}", rep.dropped);
    for (k, v) in &f.terms {
        let w = g.terms.get(k).cloned().unwrap_or_else(RatFn::zero);
        if !v.eq_exact(&w) {
            println!("DIFF {:?}: {} vs {}", k, v.display_string(), w.display_string());
        }
    }
    for (k, w) in &g.terms {
        if !f.terms.contains_key(k) {
            println!("EXTRA {:?}: {}", k, w.display_string());
        }
    }
}
