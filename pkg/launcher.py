#!/usr/bin/env python3
"""
Tropical / m-Hessian Toolkit Launcher
Batch front door: read JSON inputs, run one computation, write JSON results
"""

import argparse
import logging
import sys
from fractions import Fraction
from typing import List, Optional

import numpy as np

import serialization
from capacity import CapacityProblem, capacity, quasicontinuity_experiment
from config import LOG_FORMAT, LOG_LEVEL, QUASI_EPS
from errors import (EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, InputError, NotMSubharmonicError,
                    NumericalError)
from exact_geometry import volume
from exact_linalg import to_vector
from grids import GridFunction
from hessian_measures import SymmetricMatrix, hessian_measure_smooth, pl_monge_ampere
from indicators import LelongFunction, newton_number, recession_indicator
from intersection import intersection_mass, stable_intersection
from oracles import ORACLES
from plotting import render_svg
from tropical import (TropicalPolynomial, dual_subdivision, evaluate, hypersurface,
                      newton_polytope)

logger = logging.getLogger('launcher')

VERBS = ('eval', 'newton', 'subdivide', 'hypersurface', 'intersect', 'mass', 'hessian',
         'capacity', 'quasicont', 'indicator', 'newton-number', 'oracle')


def status(message: str):
    """Status lines go to stderr; stdout carries only JSON"""
    print(message, file=sys.stderr)


def _text(q) -> str:
    return str(Fraction(q))


def _point(text: str) -> tuple:
    try:
        return to_vector(x.strip() for x in text.split(','))
    except (TypeError, ValueError) as e:
        raise InputError(f"cannot read point {text!r}: {e}") from e


def _load(path: str, kind):
    obj = serialization.load(path)
    if not isinstance(obj, kind):
        raise InputError(f"{path} holds a {type(obj).__name__}, expected {kind.__name__}")
    return obj


def _load_many(paths: List[str], kind) -> list:
    items = []
    for path in paths:
        obj = serialization.load(path)
        for item in obj if isinstance(obj, list) else [obj]:
            if not isinstance(item, kind):
                raise InputError(f"{path} holds a {type(item).__name__}, expected {kind.__name__}")
            items.append(item)
    return items


def _lelong(path: str):
    obj = serialization.load(path)
    if isinstance(obj, TropicalPolynomial):
        return obj
    if isinstance(obj, GridFunction):
        # a bounded sample trivially has linear growth
        return LelongFunction.from_grid(obj, growth=(0.0, float(np.max(np.abs(obj.values)))))
    raise InputError(f"{path} is neither a tropical polynomial nor a grid function")


# --------------------------------------------------------------------------
# Verbs

def cmd_eval(args):
    f = _load(args.inputs[0], TropicalPolynomial)
    if args.at is None:
        raise InputError("eval needs --at")
    return {"value": _text(evaluate(f, _point(args.at)))}


def cmd_newton(args):
    f = _load(args.inputs[0], TropicalPolynomial)
    P = newton_polytope(f)
    return {"polytope": serialization.encode(P), "dim": P.dim, "volume": _text(volume(P))}


def cmd_subdivide(args):
    f = _load(args.inputs[0], TropicalPolynomial)
    S = dual_subdivision(f)
    if args.svg:
        render_svg(S, args.svg)
    return {"cells": [{"polytope": serialization.encode(cell), "members": [list(a) for a in members]}
                      for cell, members in zip(S.cells, S.members)]}


def cmd_hypersurface(args):
    H = hypersurface(_load(args.inputs[0], TropicalPolynomial))
    if args.svg:
        render_svg(H, args.svg)
    return serialization.encode(H)


def cmd_intersect(args):
    factors = _load_many(args.inputs, TropicalPolynomial)
    cycle = stable_intersection(*factors, seed=args.seed)
    if args.svg:
        render_svg(cycle, args.svg)
    if args.mass:
        return {"mass": _text(intersection_mass(cycle))}
    return serialization.encode(cycle)


def cmd_mass(args):
    f = _load(args.inputs[0], TropicalPolynomial)
    return serialization.encode(pl_monge_ampere(f, args.m))


def cmd_hessian(args):
    u = _load(args.inputs[0], GridFunction)
    m = args.m or u.n
    try:
        measure = hessian_measure_smooth(u, m, tol=args.tol)
    except NotMSubharmonicError as e:
        path = (args.out or 'hessian') + '.violations.json'
        serialization.dump([{"node": list(node), "point": list(point), "j": j, "sigma": value}
                            for node, point, j, value in e.violations], path)
        status(f"⚠️ violation map written to {path}")
        raise
    if args.mass:
        return {"mass": measure.total_mass()}
    return serialization.encode(measure)


def _capacity_problem(path: str, args) -> CapacityProblem:
    prob = _load(path, CapacityProblem)
    if args.mask or args.m:
        K = serialization.parse_mask_spec(args.mask, prob.n) if args.mask else prob.K
        prob = CapacityProblem(prob.domain, K, args.m or prob.m, prob.V, prob.resolution)
    return prob


def cmd_capacity(args):
    prob = _capacity_problem(args.inputs[0], args)
    kwargs = {} if args.tol is None else {"tol": args.tol}
    result = capacity(prob, **kwargs)
    if args.svg and result.extremal is not None:
        slice_at = {k: result.extremal.u.resolution[k] // 2 for k in range(2, result.extremal.u.n)}
        render_svg(result.extremal.u, args.svg, slice_at or None)
    return {"capacity": result.value, "lower_bound": result.lower_bound, "residual": result.residual,
            "iterations": result.iterations, "converged": result.converged}


def cmd_quasicont(args):
    u = _load(args.inputs[0], GridFunction)
    kwargs = {} if args.tol is None else {"tol": args.tol}
    report = quasicontinuity_experiment(u, args.m or 1, eps=QUASI_EPS, **kwargs)
    return {"rows": [row._asdict() for row in report.rows], "first_below": report.first_below}


def cmd_indicator(args):
    at = _point(args.at) if args.at else None
    psi = recession_indicator(_lelong(args.inputs[0]), at)
    doc = serialization.encode(psi)
    if psi.diagnostics:
        doc["converged"] = psi.converged
    return doc


def cmd_newton_number(args):
    f = _lelong(args.inputs[0])
    at = _point(args.at) if args.at else None
    n = f.n
    result = newton_number(f, at, args.m or n, args.mode)
    return {"residual": _text(result.residual),
            "literal": "divergent" if result.divergent else str(result.literal),
            "agree": bool(result.agree), "mode": args.mode,
            "value": _text(result.value) if args.mode == 'residual' else
            ("divergent" if result.divergent else str(result.value))}


def cmd_oracle(args):
    if not args.inputs:
        raise InputError(f"oracle needs a name: {', '.join(sorted(ORACLES))}")
    name, paths = args.inputs[0], args.inputs[1:]
    if name not in ORACLES:
        raise InputError(f"unknown oracle {name!r}; choose from {', '.join(sorted(ORACLES))}")
    if not paths:
        raise InputError(f"oracle {name} needs an input file")
    oracle = ORACLES[name]
    if name == 'mixed-volume':
        return {"mixed_volume": _text(oracle(*_load_many(paths, TropicalPolynomial)))}
    if name == 'gradient-image':
        return {"volume": _text(oracle(_load(paths[0], TropicalPolynomial)))}
    if name == 'capacity':
        return {"capacity": oracle(_capacity_problem(paths[0], args))}
    doc = serialization.load_raw(paths[0])
    matrices = [SymmetricMatrix.from_rows([[serialization.parse_rational(x) for x in row] for row in M])
                for M in doc.get("matrices", [])]
    return {"value": _text(oracle(matrices, int(doc.get("beta_power", 0))))}


COMMANDS = {
    'eval': cmd_eval,
    'newton': cmd_newton,
    'subdivide': cmd_subdivide,
    'hypersurface': cmd_hypersurface,
    'intersect': cmd_intersect,
    'mass': cmd_mass,
    'hessian': cmd_hessian,
    'capacity': cmd_capacity,
    'quasicont': cmd_quasicont,
    'indicator': cmd_indicator,
    'newton-number': cmd_newton_number,
    'oracle': cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='launcher.py',
        description='Tropical hypersurfaces, m-Hessian measures, capacities and indicators')
    parser.add_argument('verb', choices=VERBS, help='computation to run')
    parser.add_argument('inputs', nargs='*', help='input JSON file(s); for oracle: name then files')
    parser.add_argument('--out', help='write the JSON result here instead of stdout')
    parser.add_argument('--m', type=int, help='Hessian order m')
    parser.add_argument('--mask', help="K as 'box:a1,b1,...;ball:c1,...,r;point:x1,...'")
    parser.add_argument('--seed', type=int, help='displacement seed (default: derived from the inputs)')
    parser.add_argument('--mode', choices=('residual', 'literal'), default='residual')
    parser.add_argument('--tol', type=float, help='tolerance override')
    parser.add_argument('--at', help="point as 'x1,x2,...'")
    parser.add_argument('--mass', action='store_true', help='report only the total mass')
    parser.add_argument('--svg', help='also render a static SVG picture')
    parser.add_argument('--verbose', action='store_true')
    return parser


def execute(args) -> int:
    """Run one command; returns the exit status"""
    if args.verb not in ('oracle',) and not args.inputs:
        raise InputError(f"{args.verb} needs an input file")
    result = COMMANDS[args.verb](args)
    text = serialization.dumps(result)
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as fh:
            fh.write(text)
        status(f"✅ {args.verb}: result written to {args.out}")
    else:
        sys.stdout.write(text)
        status(f"✅ {args.verb} done")
    if isinstance(result, dict) and result.get("converged") is False:
        status("⚠️ iteration stopped before convergence")
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main launcher function"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT

    logging.basicConfig(level=logging.DEBUG if args.verbose else LOG_LEVEL, format=LOG_FORMAT,
                        stream=sys.stderr)
    try:
        return execute(args)
    except InputError as e:
        status(f"❌ Input error: {e}")
        return EXIT_INPUT
    except OSError as e:
        status(f"❌ Cannot read or write file: {e}")
        return EXIT_INPUT
    except NumericalError as e:
        status(f"❌ Numerical error: {e}")
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        status("\n👋 Interrupted")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
