//! Symmetric 6-point triangle rule, exact for polynomials of degree 4.

const A1: f64 = 0.445_948_490_915_964_886_318_329_253_883;
const W1: f64 = 0.223_381_589_678_011_465_944_640_403_818;
const A2: f64 = 0.091_576_213_509_770_743_459_571_463_402;
const W2: f64 = 0.109_951_743_655_321_867_388_692_929_515;

/// Barycentric points and weights (weights sum to one; scale by the area).
pub fn dunavant4() -> [([f64; 3], f64); 6] {
    let b1 = 1.0 - 2.0 * A1;
    let b2 = 1.0 - 2.0 * A2;
    [
        ([A1, A1, b1], W1),
        ([A1, b1, A1], W1),
        ([b1, A1, A1], W1),
        ([A2, A2, b2], W2),
        ([A2, b2, A2], W2),
        ([b2, A2, A2], W2),
    ]
}
