"""Command-line driver.

Exit codes: 0 pass, 1 failed check, 2 usage or input error, 3 numerical failure.
"""

import argparse
import configparser
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import sympy

from . import assembly
from .element import ElementError, Formulation, format_kernels, local_stiffness
from .loads import BoundaryError, DirichletSpec, TractionSpec, assemble_tractions
from .material import MaterialError, make_material, material_from_lame
from .mesh import MeshError, compute_geometry, generate_structured_mesh, polygon_geometry, read_mesh
from .verify import (GOLDEN_DOMAIN, PATCH_CASES, PATCH_CSV_HEADER, QUADRATIC_AXIAL, ManufacturedField,
                     convergence_study, patch_csv_rows, run_patch_test)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    divisions: tuple = (4, 4)
    domain: tuple = GOLDEN_DOMAIN
    mesh_file: str = None
    E: float = 1.0
    nu: float = 0.3
    lame: tuple = None
    tau: float = None
    formulation: Formulation = field(default_factory=Formulation)
    solver: str = "direct"
    serial: bool = False
    out: str = None
    case: str = "all"
    levels: tuple = ((4, 4), (8, 8), (16, 16))
    field_name: str = "quadratic"
    min_rate: float = 0.9
    dirichlet: list = field(default_factory=list)
    traction: list = field(default_factory=list)
    element: int = 0
    polygon: str = None
    dump_kernels: bool = False

    def material(self):
        if self.lame is not None:
            return material_from_lame(*self.lame)
        return make_material(self.E, self.nu)

    def mesh_source(self):
        """``(mesh, file_dirichlet, file_traction)``."""
        if self.mesh_file:
            mf = read_mesh(self.mesh_file)
            return mf.mesh, mf.dirichlet, mf.traction
        return generate_structured_mesh(*self.domain, *self.divisions), [], []


# --- parsing helpers ------------------------------------------------------

def parse_divisions(text):
    parts = str(text).lower().replace(" ", "").split("x")
    try:
        if len(parts) == 1:
            n = int(parts[0])
            return n, n
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise UsageError(f"mesh divisions must look like NRxNZ, got {text!r}")


def parse_domain(text):
    try:
        vals = tuple(float(v) for v in str(text).split(","))
    except ValueError:
        vals = ()
    if len(vals) != 4:
        raise UsageError(f"domain must be r_in,r_out,z_min,z_max, got {text!r}")
    return vals


def parse_levels(text):
    levels = tuple(parse_divisions(t) for t in str(text).split(",") if t.strip())
    if len(levels) < 3:
        raise UsageError("a convergence study needs at least 3 levels")
    return levels


def _bool(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


_R, _Z = sympy.symbols("r z")


def expression(text):
    """Compile an expression in ``r`` and ``z`` to a numpy function."""
    try:
        expr = sympy.sympify(text, locals={"r": _R, "z": _Z})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise UsageError(f"cannot parse expression {text!r}") from exc
    if expr.free_symbols - {_R, _Z}:
        raise UsageError(f"expression {text!r} may only use r and z")
    fn = sympy.lambdify((_R, _Z), expr, "numpy")
    return lambda r, z: float(fn(r, z))


def node_predicate(name, mesh):
    """Node ids selected by a named predicate on the mesh boundary."""
    v = mesh.vertices
    bnd = np.array(mesh.boundary_nodes(), dtype=int)
    lo, hi = v.min(axis=0), v.max(axis=0)
    tol = 1e-12 * max(float((hi - lo).max()), 1.0)
    preds = {
        "boundary": np.ones(len(bnd), bool),
        "r_min": np.abs(v[bnd, 0] - lo[0]) <= tol,
        "r_max": np.abs(v[bnd, 0] - hi[0]) <= tol,
        "z_min": np.abs(v[bnd, 1] - lo[1]) <= tol,
        "z_max": np.abs(v[bnd, 1] - hi[1]) <= tol,
    }
    if name == "all":
        return list(range(mesh.n_nodes))
    if name not in preds:
        raise UsageError(f"unknown node set {name!r}; use all, boundary, r_min, r_max, z_min or z_max")
    return bnd[preds[name]].tolist()


def edge_predicate(name, mesh):
    nodes = set(node_predicate(name, mesh))
    return [mesh.edge_nodes(e, i) for e, i in mesh.boundary_edges
            if set(mesh.edge_nodes(e, i)) <= nodes]


NAMED_FIELDS = {name: (c.u_r, c.u_z) for name, c in PATCH_CASES.items()}
NAMED_FIELDS["zero"] = ("0", "0")
NAMED_FIELDS["quadratic"] = QUADRATIC_AXIAL[1:]


def build_dirichlet(mesh, entries, file_entries=()):
    """``entries`` are ``(node_set, spec)``; spec is a field name or ``r:EXPR;z:EXPR``."""
    spec = DirichletSpec.from_entries(file_entries)
    for where, what in entries:
        nodes = node_predicate(where.strip(), mesh)
        what = what.strip()
        if what in NAMED_FIELDS:
            comps = dict(zip(("r", "z"), NAMED_FIELDS[what]))
        else:
            comps = {}
            for part in what.split(";"):
                if ":" not in part:
                    raise UsageError(f"Dirichlet value {what!r}: use a field name or r:EXPR;z:EXPR")
                c, expr = part.split(":", 1)
                comps[c.strip().lower()] = expr
        for c, expr in comps.items():
            if c not in ("r", "z"):
                raise UsageError(f"unknown component {c!r}")
            fn = expression(expr)
            for n in nodes:
                spec.add(n, c, fn(*mesh.vertices[n]))
    return spec


def build_traction(mesh, entries, file_entries=()):
    """``entries`` are ``(edge_set, "T_R,T_Z")`` with constants or expressions in r, z."""
    spec = TractionSpec()
    for a, b, tr, tz in file_entries:
        spec.add(a, b, (tr, tz))
    for where, what in entries:
        parts = what.split(",")
        if len(parts) != 2:
            raise UsageError(f"traction {what!r}: expected T_R,T_Z")
        try:
            t = (float(parts[0]), float(parts[1]))
        except ValueError:
            fr, fz = expression(parts[0]), expression(parts[1])

            def t(r, z, fr=fr, fz=fz):
                return fr(r, z), fz(r, z)

        for a, b in edge_predicate(where.strip(), mesh):
            spec.add(a, b, t)
    spec.validate(mesh)
    return spec


# --- config ---------------------------------------------------------------

def read_config(path):
    """Flat INI file with sections mesh, material, run, dirichlet, traction."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path}")
    out = {}
    m = cp["mesh"] if cp.has_section("mesh") else {}
    if "divisions" in m:
        out["divisions"] = parse_divisions(m["divisions"])
    if "domain" in m:
        out["domain"] = parse_domain(m["domain"])
    if "file" in m:
        out["mesh_file"] = str(Path(path).parent / m["file"])
    mat = cp["material"] if cp.has_section("material") else {}
    try:
        if "E" in mat:
            out["E"] = float(mat["E"])
        if "nu" in mat:
            out["nu"] = float(mat["nu"])
        if "lambda" in mat or "mu" in mat:
            out["lame"] = (float(mat["lambda"]), float(mat["mu"]))
        run = cp["run"] if cp.has_section("run") else {}
        if "tau" in run:
            out["tau"] = float(run["tau"])
        if "min_rate" in run:
            out["min_rate"] = float(run["min_rate"])
    except (KeyError, ValueError) as exc:
        raise UsageError(f"config {path}: {exc}") from exc
    for key in ("solver", "case", "out"):
        if key in run:
            out[key] = run[key]
    if "field" in run:
        out["field_name"] = run["field"]
    if "serial" in run:
        out["serial"] = _bool(run["serial"])
    if "two_pi_normalization" in run:
        out["two_pi_normalization"] = _bool(run["two_pi_normalization"])
    if "levels" in run:
        out["levels"] = parse_levels(run["levels"])
    for sec in ("dirichlet", "traction"):
        if cp.has_section(sec):
            out[sec] = list(cp[sec].items())
    return out


# --- argparse -------------------------------------------------------------

def _pair(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected SET=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("mesh and material")
    g.add_argument("--config", help="INI file with [mesh] [material] [run] [dirichlet] [traction]")
    g.add_argument("--mesh", help="structured divisions NRxNZ (default 4x4)")
    g.add_argument("--domain", help="r_in,r_out,z_min,z_max (default 1,3,0,2)")
    g.add_argument("--mesh-file", help="mesh in the line-oriented text format")
    g.add_argument("--E", type=float)
    g.add_argument("--nu", type=float)
    g.add_argument("--lame", nargs=2, type=float, metavar=("LAMBDA", "MU"))
    g.add_argument("--tau", type=float, help="stabilisation parameter (default: shear modulus)")
    g.add_argument("--two-pi-normalization", action="store_true", default=None,
                   help="drop the 2 pi factor from the stabilisation")
    g.add_argument("--stabilizer", choices=("linear", "constant_strain", "projector"))
    g.add_argument("--fan-weights", choices=("barycentric", "incident"))
    g.add_argument("--axial-shear", choices=("correction", "zero"))
    g.add_argument("--solver", choices=("direct", "cg"))
    g.add_argument("--serial", action="store_true", default=None)
    g.add_argument("--out", help="output directory")

    p = argparse.ArgumentParser(prog="axivem", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve a boundary value problem")
    s.add_argument("--dirichlet", type=_pair, action="append", default=[], metavar="SET=VALUE",
                   help="SET in all|boundary|r_min|r_max|z_min|z_max; VALUE a field name "
                        f"({', '.join(NAMED_FIELDS)}) or r:EXPR;z:EXPR")
    s.add_argument("--traction", type=_pair, action="append", default=[], metavar="SET=TR,TZ")
    s.add_argument("--field", help="shortcut for --dirichlet boundary=FIELD")
    s.add_argument("--dump-kernels", action="store_true", help="also write per-element kernels")

    pt = sub.add_parser("patch", parents=[common], help="constant-strain patch tests")
    pt.add_argument("--case", choices=("all",) + tuple(PATCH_CASES))

    c = sub.add_parser("converge", parents=[common], help="manufactured-solution convergence study")
    c.add_argument("--levels", help="comma-separated divisions, e.g. 4x4,8x8,16x16")
    c.add_argument("--field", help=f"{', '.join(NAMED_FIELDS)} or EXPR_R;EXPR_Z")
    c.add_argument("--min-rate", type=float)

    d = sub.add_parser("dump-element", parents=[common], help="print the kernels of one element")
    d.add_argument("--element", type=int, default=0)
    d.add_argument("--polygon", help="vertices r1,z1;r2,z2;... instead of a mesh element")
    return p


def make_config(args):
    values = read_config(args.config) if args.config else {}
    if args.mesh:
        values["divisions"] = parse_divisions(args.mesh)
    if args.domain:
        values["domain"] = parse_domain(args.domain)
    for key in ("mesh_file", "E", "nu", "tau", "solver", "serial", "out", "two_pi_normalization"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if args.lame:
        values["lame"] = tuple(args.lame)
    if values.get("mesh_file") and ({"divisions", "domain"} & values.keys()):
        raise UsageError("give either a mesh file or structured mesh parameters, not both")
    form = Formulation()
    overrides = {k: getattr(args, a) for k, a in (("stabilized_modes", "stabilizer"),
                                                   ("fan_weights", "fan_weights"),
                                                   ("axial_shear", "axial_shear"))
                 if getattr(args, a) is not None}
    if values.pop("two_pi_normalization", False):
        overrides["two_pi"] = False
    values["formulation"] = replace(form, **overrides)

    cmd = args.command
    if cmd == "patch" and args.case:
        values["case"] = args.case
    if cmd == "converge":
        if args.levels:
            values["levels"] = parse_levels(args.levels)
        if args.field:
            values["field_name"] = args.field
        if args.min_rate is not None:
            values["min_rate"] = args.min_rate
    if cmd == "solve":
        dir_entries = values.get("dirichlet", []) + list(args.dirichlet)
        if args.field:
            dir_entries.append(("boundary", args.field))
        values["dirichlet"] = dir_entries
        values["traction"] = values.get("traction", []) + list(args.traction)
    else:
        values.pop("dirichlet", None)
        values.pop("traction", None)
    if cmd == "dump-element":
        values["element"] = args.element
        values["polygon"] = args.polygon
    if cmd != "converge":
        values.pop("field_name", None)
    values["dump_kernels"] = bool(getattr(args, "dump_kernels", False))
    return RunConfig(command=cmd, **values)


# --- commands -------------------------------------------------------------

def _out_dir(cfg):
    if cfg.out is None:
        return None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(cfg, stream=None):
    stream = sys.stdout if stream is None else stream
    mesh, file_dir, file_trac = cfg.mesh_source()
    if not (cfg.dirichlet or file_dir):
        raise UsageError("solve needs Dirichlet data (at least the axial translation must be fixed)")
    material = cfg.material()
    bc = build_dirichlet(mesh, cfg.dirichlet, file_dir)
    tr = build_traction(mesh, cfg.traction, file_trac)
    system = assembly.assemble(mesh, material, cfg.tau, cfg.formulation, cfg.serial)
    system.f += assemble_tractions(mesh, tr)
    rep = assembly.solve(system, bc, material, mesh, method=cfg.solver)
    stream.write(f"nodes {mesh.n_nodes}  elements {mesh.n_elements}  dofs {system.n_dofs}\n")
    stream.write(f"solver {rep.method}  relative residual {rep.residual:.3e}\n")
    stream.write("average strain " + " ".join(f"{x:.6g}" for x in rep.strains.mean(axis=0)) + "\n")
    out = _out_dir(cfg)
    if out is not None:
        assembly.write_displacements(out / "displacements.csv", mesh, rep.displacement)
        assembly.write_element_table(out / "elements.csv", mesh, rep)
        if cfg.dump_kernels:
            text = "".join(f"# element {e}\n" + format_kernels(k) for e, k in enumerate(system.kernels))
            (out / "kernels.txt").write_text(text)
    return EXIT_OK


def cmd_patch(cfg, stream=None):
    stream = sys.stdout if stream is None else stream
    mesh, _, _ = cfg.mesh_source()
    cases = list(PATCH_CASES) if cfg.case == "all" else [cfg.case]
    results = [run_patch_test(c, mesh, cfg.material(), cfg.tau, cfg.formulation, cfg.serial)
               for c in cases]
    for r in results:
        stream.write(r.report() + "\n")
    out = _out_dir(cfg)
    if out is not None:
        assembly.write_csv(out / "patch.csv", PATCH_CSV_HEADER, patch_csv_rows(results))
        (out / "patch.txt").write_text("\n".join(r.report() for r in results))
    failed = [r.case.name for r in results if not r.passed]
    if failed:
        stream.write(f"failed checks in: {', '.join(failed)}\n")
        return EXIT_FAIL
    return EXIT_OK


def _manufactured(name):
    if name in NAMED_FIELDS:
        return ManufacturedField(*NAMED_FIELDS[name], name=name)
    parts = name.split(";")
    if len(parts) != 2:
        raise UsageError(f"field {name!r}: use a field name or EXPR_R;EXPR_Z")
    try:
        return ManufacturedField(*parts, name=name)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise UsageError(f"cannot parse field {name!r}") from exc


def cmd_converge(cfg, stream=None):
    stream = sys.stdout if stream is None else stream
    if cfg.mesh_file:
        raise UsageError("convergence studies use structured meshes; drop --mesh-file")
    study = convergence_study(_manufactured(cfg.field_name), cfg.levels, cfg.material(), cfg.tau,
                              cfg.domain, cfg.formulation, cfg.serial)
    stream.write(f"field {study.field_name}\n{'mesh':>8} {'h':>12} {'error':>14}\n")
    for name, h, err in study.rows():
        stream.write(f"{name:>8} {h:>12.6g} {err:>14.6e}\n")
    stream.write(f"rate {study.rate_label()}  monotone {study.monotone}\n")
    out = _out_dir(cfg)
    if out is not None:
        assembly.write_csv(out / "convergence.csv", ("mesh", "h", "error"), study.rows())
        assembly.write_csv(out / "rate.csv", ("field", "rate", "monotone"),
                           [(study.field_name, study.rate_label(), str(study.monotone))])
    if study.exact:
        return EXIT_OK
    ok = study.rate >= cfg.min_rate and study.monotone
    if not ok:
        stream.write(f"rate below {cfg.min_rate:g} or errors not monotone\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dump_element(cfg, stream=None):
    stream = sys.stdout if stream is None else stream
    if cfg.polygon:
        try:
            pts = np.array([[float(x) for x in p.split(",")] for p in cfg.polygon.split(";")])
        except ValueError as exc:
            raise UsageError(f"cannot parse polygon {cfg.polygon!r}") from exc
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise UsageError("polygon vertices must be r,z pairs")
        geom = polygon_geometry(pts)
    else:
        mesh, _, _ = cfg.mesh_source()
        if not 0 <= cfg.element < mesh.n_elements:
            raise UsageError(f"element {cfg.element} out of range 0..{mesh.n_elements - 1}")
        geom = compute_geometry(mesh, cfg.element)
    text = format_kernels(local_stiffness(geom, cfg.material(), cfg.tau, cfg.formulation))
    stream.write(text)
    out = _out_dir(cfg)
    if out is not None:
        (out / "element.txt").write_text(text)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "patch": cmd_patch, "converge": cmd_converge,
            "dump-element": cmd_dump_element}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, MeshError, MaterialError, BoundaryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (assembly.SolverError, ElementError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
