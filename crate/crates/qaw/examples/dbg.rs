use num_complex::Complex;
use qaw::identities::mm::verify_appendix_b2;
use qaw::TruncationPolicy;

fn main() {
    let p = TruncationPolicy::<f64>::default();
    let c = |x: f64| Complex::new(x, 0.0);
    match verify_appendix_b2(c(0.55), c(0.4), c(0.35), c(0.8), 0.5, &p) {
        Ok(checks) => {
            for ck in checks {
                println!("{:45} err {:.3e} tol {:.0e} {}", ck.name, ck.rel_err, ck.tol, if ck.ok() { "ok" } else { "FAIL" });
            }
        }
        Err(e) => println!("ERR: {e}"),
    }
}
