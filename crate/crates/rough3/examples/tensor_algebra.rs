//! Arithmetic in the truncated tensor algebra T³(ℝᵈ): Chen products,
//! dilation, segment exponentials, the antipode and the shuffle relations.
//!
//! Run with: cargo run --example tensor_algebra

use rough3::tensor::Tensor3;

fn main() -> rough3::Result<()> {
    // The signature of a straight segment is the truncated exponential.
    let a = Tensor3::segment_exp(&[1.0, 0.0]);
    let b = Tensor3::segment_exp(&[0.0, 1.0]);
    println!("exp((1,0)) level2 diag = {:?}", [a.l2(0, 0), a.l2(1, 1)]);

    // Chen's relation composes increments: the "hook" path right-then-up.
    let hook = a.mul(&b)?;
    println!(
        "hook: X²₀₁ = {}, X²₁₀ = {}, Lévy area = {}",
        hook.l2(0, 1),
        hook.l2(1, 0),
        0.5 * (hook.l2(0, 1) - hook.l2(1, 0))
    );

    // The antipode is a two-sided group inverse.
    let inv = hook.antipode();
    let id = hook.mul(&inv)?;
    println!("|hook ⊗ hook⁻¹ − 1| = {:.3e}", id.max_abs_diff(&Tensor3::identity(2)));

    // Dilation scales level k by λᵏ and is a group homomorphism.
    let lam = 0.5;
    let lhs = hook.dilate(lam);
    let rhs = a.dilate(lam).mul(&b.dilate(lam))?;
    println!("dilation homomorphism defect = {:.3e}", lhs.max_abs_diff(&rhs));

    // Geometric elements satisfy the shuffle relations exactly.
    println!("shuffle residual of the hook = {:.3e}", hook.shuffle_residual());
    Ok(())
}
