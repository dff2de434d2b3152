//! Foundation layer: dense complex polynomials, path transport of linear
//! ODE systems, and central finite differences.

mod fd;
mod poly;
mod transport;

pub use fd::{default_step, fd_derivative, fd_derivative_richardson, Stencil};
pub use poly::{chebyshev_nodes, poly_div_linear, poly_eval, poly_interp, Poly};
pub use transport::{ode_transport, ode_transport_with, rk4_fixed, PathInU, TransportOptions};
