"""Hypothesis strategies for exp-log functions and trig-algebra elements."""
from fractions import Fraction

from hypothesis import strategies as st

from oscint.expr import parse

# atoms ordered by comparability class, slowest first
ATOMS = ["log(log(x))", "log(x)", "x", "exp(x)", "exp(x^2)"]

small_q = st.sampled_from([Fraction(k, 2) for k in range(-6, 7)])
nonzero_q = small_q.filter(lambda q: q != 0)
coeff = st.sampled_from([Fraction(1), Fraction(2), Fraction(-1), Fraction(3, 2), Fraction(-5, 3)])


def _pow(atom, q):
    return f"({atom})^({q})"


@st.composite
def monomial_of_class(draw, j):
    """c * prod ATOMS[i]^e_i over i <= j with e_j != 0, so gamma is that of ATOMS[j]."""
    parts = [_pow(ATOMS[j], draw(nonzero_q))]
    for i in range(j):
        if draw(st.booleans()):
            parts.append(_pow(ATOMS[i], draw(small_q)))
    return f"({draw(coeff)})*" + "*".join(parts)


@st.composite
def hardy_pair_same_class(draw, lo=0, hi=4):
    j = draw(st.integers(lo, hi))
    return parse(draw(monomial_of_class(j))), parse(draw(monomial_of_class(j)))


@st.composite
def hardy_element(draw, lo=0, hi=4, perturb=True):
    """A function not asymptotic to a constant, optionally with a lower-order perturbation."""
    j = draw(st.integers(lo, hi))
    m = draw(monomial_of_class(j))
    if perturb and draw(st.booleans()):
        m = f"{m}*(1 + ({draw(coeff)})/x)"
    return parse(m)


# positive building blocks safe to raise to any rational power at x >= 10
_POS = ["x", "log(x)", "x + 1", "x^2 + 3", "exp(1/x)", "log(x) + x"]


def expr_trees(max_leaves=6):
    """Random expressions in x for structural and numeric derivative checks."""
    leaf = st.one_of(
        st.just("x"),
        st.sampled_from(["2", "3/2", "-1", "pi"]),
        st.builds(lambda b, q: f"({b})^({q})", st.sampled_from(_POS), nonzero_q),
    )

    def extend(children):
        return st.one_of(
            st.builds(lambda a, b: f"({a}) + ({b})", children, children),
            st.builds(lambda a, b: f"({a})*({b})", children, children),
            st.builds(lambda a: f"sin({a})", children),
            st.builds(lambda a: f"cos({a})", children),
            st.builds(lambda b: f"log({b})", st.sampled_from(_POS)),
            st.builds(lambda a: f"exp(({a})/x)", leaf),
        )
    return st.recursive(leaf, extend, max_leaves=max_leaves).map(parse)


# trig-algebra elements over the generators x and x^2
_COEFS = ["1", "x", "x^2", "log(x)", "1/x", "exp(-x)", "x*log(x)", "exp(x)"]
_SIGMAS = ["1", "sin(x)", "cos(x)", "sin(x)^2", "sin(x)*cos(x)", "sin(x^2)", "cos(x^2)",
           "sin(x)*cos(x^2)", "sin(x)^2*sin(x^2)"]


@st.composite
def hg_element(draw, max_terms=3):
    n = draw(st.integers(1, max_terms))
    sig = draw(st.lists(st.sampled_from(_SIGMAS), min_size=n, max_size=n, unique=True))
    parts = [f"({draw(coeff)})*({draw(st.sampled_from(_COEFS))})*({s})" for s in sig]
    return parse(" + ".join(parts))
