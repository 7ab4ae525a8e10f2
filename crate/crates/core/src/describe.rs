//! Short descriptions of the computed objects: formula and how it is checked.

pub const TOPICS: &[(&str, &str)] = &[
    (
        "two_star",
        "2* = 2n/(n-2k), exact rational.\n\
         Check: constants --n N --k K prints it as a fraction and as a float.",
    ),
    (
        "a_nk",
        "a_{n,k} = (prod_{j=-k}^{k-1} (n + 2j))^{-1/k}, the bubble scale in U = (mu/(mu^2 + a r^2))^{(n-2k)/2}.\n\
         Check: Delta^k U = U^{2*-1} in exact radial arithmetic (suite bubble).",
    ),
    (
        "C_nk",
        "C_{n,k} = 1 / ((n-2) omega_{n-1} prod_{j=1}^{k-1} (n-2k+2j-2)(2k-2j)), so that Delta^k (C r^{2k-n}) = delta_0.\n\
         Check: -d/dr Delta^{k-1}(C r^{2k-n}) = r^{1-n}/omega_{n-1} with big rationals for 2 <= 2k < n <= 16, k <= 6.",
    ),
    (
        "omega",
        "omega_{n-1} = 2 pi^{n/2} / Gamma(n/2), the area of the unit sphere in R^n.",
    ),
    (
        "kappa",
        "kappa'_k = (n-2k) int U^{2*-1} / (2 int (Delta^{(k-1)/2} U)^2) at n = 2k+4, kappa_k = n^{k-1} kappa'_k.\n\
         Expected values kappa_1 = 2 and kappa_2 = 2 sqrt(30).\n\
         Recipe: both integrals in closed radial form, unit bubble, adaptive quadrature with exact tails.",
    ),
    (
        "bubble",
        "U(r) = (mu/(mu^2 + a_{n,k} r^2))^{(n-2k)/2}, positive radial solution of Delta^k U = U^{2*-1}.\n\
         Checks: residual of the exact iterated Laplacian over r in [1e-3, 1e3]; far-field coefficient\n\
         a^{-(n-2k)/2} against C_{n,k} int U^{2*-1}.",
    ),
    (
        "pohozaev",
        "With T(u) = (n-2k)/2 u + r u', int Delta^k u T(u) over a ball or annulus equals\n\
         n eps/(2*(2*-eps)) int f |u|^{2*-eps} + 1/(2*-eps) int (x.grad f)|u|^{2*-eps} + boundary terms\n\
         int_{dB} (x,nu)(Delta^{k/2}u)^2/2 + S(u), for Delta^k u = f |u|^{2*-2-eps} u.\n\
         Recipe: both sides from exact radial profiles, volume terms by adaptive quadrature.",
    ),
    (
        "D_r",
        "D_r = int_{|x| = r} (x,nu)(Delta^{k/2} G)^2/2 + S(G) for G = C_{n,k} r^{2k-n}; it vanishes for every r.\n\
         Check: five radii, |D_r| and the spread across radii.",
    ),
    (
        "commutator",
        "Delta^{l/2}(x.grad v) = l Delta^{l/2} v + x.grad(Delta^{l/2} v), with Delta^{l/2} = grad Delta^{(l-1)/2} for odd l.\n\
         Check: exact polynomial arithmetic on every monomial of degree <= 6, l <= 2k, n <= 5.",
    ),
    (
        "green",
        "G of P = Delta^k + sum b_j Delta^j on the torus: G = Gamma + sum_{i<=p} Gamma_i * Gamma + u with Gamma = eta C d^{2k-n},\n\
         Gamma_1 = P Gamma - delta, Gamma_{i+1} = Gamma_i * Gamma_1, P u = Gamma_{p+1}.\n\
         Recipe: band-limited parametrix, convolutions as Fourier products, compared with the inverse-symbol oracle;\n\
         representation int G_x P phi = phi(x) on trigonometric polynomials; symmetry G_x(y) = G_y(x).",
    ),
    (
        "mass",
        "For n = 2k+1, G_{x0}(x) = C_{n,k} d(x,x0)^{2k-n} + m(x0) + o(1).\n\
         Recipe: G minus the band-limited parametrix, averaged over axis points at h, 2h, 4h, then Richardson\n\
         m = 2 beta(h) - beta(2h). Oracle at k = 1: the periodized Yukawa lattice sum.",
    ),
    (
        "giraud",
        "|x|^{a-n} * |x|^{b-n} behaves like |x|^{a+b-n} if a+b < n and is bounded if a+b > n.\n\
         Recipe: radial reduction of the truncated convolution, increments Z(rho) - Z(2 rho) over dyadic radii,\n\
         log-log slope; compared with min(0, a+b-n) within 0.2.",
    ),
    (
        "hardy",
        "C_H(n,k) = sup int u^2 |x|^{-2k} / int (Delta^{k/2} u)^2 over radial u; 4/(n-2)^2 for k = 1, 16/(n^2(n-4)^2) for k = 2.\n\
         Recipe: t = ln r, u = r^{-s} w, Hermite elements of degree 2k-1, largest generalized eigenvalue by\n\
         inverse iteration with a banded Cholesky factor; refinement table over M, 2M, ...",
    ),
    (
        "coercivity",
        "Margin of P - V with V = lambda s d(x,x0)^{-2k}: min eigenvalue of H^{-1/2}(P - V)H^{-1/2}, H = Delta^k + 1.\n\
         Closed-form bound: min symbol(P)/symbol(H) - lambda C, C the torus Hardy constant on the same grid.\n\
         lambda_H: the smallest lambda with a non-positive margin.",
    ),
    (
        "hardy_estimate",
        "C* = sup |G(x,y)| d(x,y)^{n-2k} (min(d(x,x0), d(y,x0)) / max(...))^gamma for the Green function of P - V.\n\
         Recipe: direct PCG solves for a set of sources; near-singularity exponent from axis means around x0.",
    ),
    (
        "trace",
        "int A(grad^{k-1} U, grad^{k-1} U) = c Tr(A) int (Delta^{(k-1)/2} U)^2 for radial U.\n\
         Recipe: exact derivative tensors and sphere moments on the left; the right with c = 1/n^{k-1}\n\
         and with the symmetric-moment constant for comparison.",
    ),
    (
        "weyl",
        "Weyl (x) B = (k/3) sum W_{ipjq} int x_p x_q d_ij Delta^{k-1} U T(U); zero for radial U.\n\
         Recipe: trace-free projection of a random 4-tensor, radial reduction with sphere moments.",
    ),
    (
        "rates",
        "Limit of eps mu^{-power} by branch: 2k < n < 2k+4 (u0 term), n >= 2k+4 (trace, u0 at n = 2k+4, Weyl),\n\
         u0 = 0 with n = 2k+2 (sphere integral, log factor) or n = 2k+1 (mass). A negative limit excludes the family.\n\
         Check: 27-case signed truth table; threshold coefficient k(3n(n-2) - 4k^2 + 4)/(12 n (n-1)), 1/5 at n = 6, k = 1.",
    ),
    (
        "sphere_moment",
        "int_{S^{n-1}} x^e = 2 prod Gamma((e_i+1)/2) / Gamma((|e|+n)/2) for even e, 0 otherwise.\n\
         Checks: double-factorial form against the Gamma form; Monte Carlo from normalized Gaussians, |z| <= 4.",
    ),
];

pub fn topic_list() -> String {
    TOPICS.iter().map(|(t, _)| *t).collect::<Vec<_>>().join("\n") + "\n"
}

/// Text for a topic; `None` for an unknown one. The empty topic lists all.
pub fn describe(topic: &str) -> Option<String> {
    if topic.is_empty() {
        return Some(topic_list());
    }
    TOPICS.iter().find(|(t, _)| *t == topic).map(|(t, body)| format!("{t}\n{body}\n"))
}
