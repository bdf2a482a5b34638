//! The expression language: parse a cost density, evaluate it, take exact
//! forward-mode gradients, and show that printing re-parses to the same tree.

use pontryagin::expr::parse;

fn main() {
    let src = "(x1^2 + u1^2) / 2 + abs(x2) * exp(-x1)";
    let tree = parse(src, 2, 1).expect("parse");

    println!("source : {src}");
    println!("printed: {tree}");

    let reparsed = parse(&tree.to_string(), 2, 1).expect("re-parse");
    assert_eq!(tree.to_string(), reparsed.to_string());
    println!("print/parse fixed point holds");

    let x = [0.3, -0.8];
    let u = [1.5];
    let value = tree.eval(&x, &u).expect("eval");
    let gx = tree.grad_x(&x, &u).expect("grad_x");
    let gu = tree.grad_u(&x, &u).expect("grad_u");

    println!("value at x={x:?}, u={u:?}: {value:.12}");
    println!("dL/dx = {:?}", gx.values);
    println!("dL/du = {:?}", gu.values);
    println!("nonsmooth point encountered: {}", gx.nonsmooth);

    // abs has a kink at x2 = 0: the gradient flags it instead of guessing.
    let kink = tree.grad_x(&[0.3, 0.0], &u).expect("grad at kink");
    println!("at x2 = 0 the gradient is {:?} with nonsmooth = {}", kink.values, kink.nonsmooth);
}
