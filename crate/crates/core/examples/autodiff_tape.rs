//! Reverse-mode gradients and a second derivative on the scalar tape,
//! compared against central differences.

use fedsciml::autodiff::{finite_diff_check, second_derivative, FdOrder, Tape, Var};

fn f<'t>(_: &'t Tape, x: &[Var<'t>]) -> Var<'t> {
    (x[0] * x[1]).sin() + x[0].exp() * x[1].powi(3)
}

fn main() {
    let x = [0.3, -0.7];
    let tape = Tape::new();
    let xs = tape.vars(&x);
    let y = f(&tape, &xs);
    println!("f = {:.6}, grad = {:?}", y.value(), tape.gradient(y, &xs).unwrap());
    println!("d2f/dx0dx1 = {:.6}", second_derivative(f, &x, 0, 1).unwrap());
    for (order, h) in [(FdOrder::First, 1e-6), (FdOrder::Second, 1e-4)] {
        let r = finite_diff_check(f, &x, order, h).unwrap();
        println!("{order:?}: max relative error vs finite differences {:.2e}", r.max_rel_err);
    }
}
