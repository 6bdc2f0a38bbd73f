//! Centered difference operators on the periodic lattice.
//!
//! `gradient` and `divergence` use the same centered stencil, so they form an
//! exact discrete adjoint pair under the lattice inner product:
//! `<div v, f> = -<v, grad f>` holds to rounding (summation by parts on the
//! torus). Their composition is the wide five-point Laplacian with effective
//! spacing `2 dx`.

use crate::grid::field::{ScalarField, VectorField};

/// Centered-difference gradient, `(f(x + dx e) - f(x - dx e)) / (2 dx)` per axis.
pub fn gradient(f: &ScalarField) -> VectorField {
    let domain = f.domain;
    let n = domain.points;
    let inv2dx = 1.0 / (2.0 * domain.dx());
    let mut out = VectorField::zeros(&domain);
    out.time_index = f.time_index;
    let data = f.values();
    match domain.dim {
        1 => {
            let comp = out.component_mut(0);
            for i in 0..n {
                let plus = data[(i + 1) % n];
                let minus = data[(i + n - 1) % n];
                comp[i] = (plus - minus) * inv2dx;
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    let here = domain.flat_index(i, j);
                    let xp = data[domain.flat_index((i + 1) % n, j)];
                    let xm = data[domain.flat_index((i + n - 1) % n, j)];
                    let yp = data[domain.flat_index(i, (j + 1) % n)];
                    let ym = data[domain.flat_index(i, (j + n - 1) % n)];
                    out.component_mut(0)[here] = (xp - xm) * inv2dx;
                    out.component_mut(1)[here] = (yp - ym) * inv2dx;
                }
            }
        }
    }
    out
}

/// Centered-difference divergence, adjoint (up to sign) of [`gradient`].
pub fn divergence(v: &VectorField) -> ScalarField {
    let domain = v.domain;
    let n = domain.points;
    let inv2dx = 1.0 / (2.0 * domain.dx());
    let mut out = ScalarField::zeros(&domain);
    out.time_index = v.time_index;
    match domain.dim {
        1 => {
            let comp = v.component(0);
            for i in 0..n {
                let plus = comp[(i + 1) % n];
                let minus = comp[(i + n - 1) % n];
                out.values_mut()[i] = (plus - minus) * inv2dx;
            }
        }
        _ => {
            let cx = v.component(0);
            let cy = v.component(1);
            for i in 0..n {
                for j in 0..n {
                    let here = domain.flat_index(i, j);
                    let div_x = (cx[domain.flat_index((i + 1) % n, j)]
                        - cx[domain.flat_index((i + n - 1) % n, j)])
                        * inv2dx;
                    let div_y = (cy[domain.flat_index(i, (j + 1) % n)]
                        - cy[domain.flat_index(i, (j + n - 1) % n)])
                        * inv2dx;
                    out.values_mut()[here] = div_x + div_y;
                }
            }
        }
    }
    out
}

/// Lattice inner product `sum f g * dx^dim`.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> f64 {
    assert!(f.domain.same_space(&g.domain));
    f.values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * f.domain.cell_measure()
}

/// Lattice inner product of vector fields, `sum v . w * dx^dim`.
pub fn vector_inner_product(v: &VectorField, w: &VectorField) -> f64 {
    assert!(v.domain.same_space(&w.domain));
    let mut total = 0.0;
    for axis in 0..v.dim() {
        total += v
            .component(axis)
            .iter()
            .zip(w.component(axis))
            .map(|(a, b)| a * b)
            .sum::<f64>();
    }
    total * v.domain.cell_measure()
}
