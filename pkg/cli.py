"""
twinwall command line.

Every subcommand assembles a RunReport, prints a human summary on stdout and
exits 0 when all of its checks pass, 1 when one fails, 2 on usage problems and
3 on malformed input files.
"""
import logging
import random
import time
from typing import List, Optional

import click
import colorama
from pydantic import ValidationError

from affine_cert import generate_certificate, load_certificate, negative_control, verify_certificate
from building import check_gallery_independence, verify_building_axioms
from errors import DomainError, FixtureValidationError, StructuralError, UsageError
from geometry_zoo import (
    ZOO_BUILDERS, FlagBuilding, describe_building, get_zoo_building, ingest_rank2_geometry, random_group_element,
)
from input_validator import get_validator, parse_isometry_map
from isometry import TwinIsometry, check_isometry, check_rigidity, extend_to_minus
from paths_walls import is_wall_connected, verify_wall_graph, wall_graph
from report_store import get_report_repository
from reports import RunReport, export_dot
from rgd_matrix import (
    check_wc_generation, commutator_projection, load_family, simply_transitive_check,
    validate_rgd_axioms, wc_consistency,
)
from settings import get_settings
from twin_building import MINUS, PLUS, TwinChamber, condition_co_k, opposition_graph, self_twin, verify_twin_axioms

logger = logging.getLogger("cli")

colorama.init()

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_FIXTURE = 3


class TwinwallGroup(click.Group):
    """Maps library errors onto exit codes"""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except FixtureValidationError as e:
            _error(str(e))
            ctx.exit(EXIT_FIXTURE)
        except ValidationError as e:
            _error("; ".join(err["msg"] for err in e.errors()))
            ctx.exit(EXIT_FIXTURE)
        except (UsageError, DomainError) as e:
            _error(str(e))
            ctx.exit(EXIT_USAGE)
        except StructuralError as e:
            _error(str(e))
            ctx.exit(EXIT_FAIL)
        except OSError as e:
            _error(f"I/O error: {e}")
            ctx.exit(EXIT_USAGE)


def _error(message: str) -> None:
    logger.error(message)
    click.secho(f"error: {message}", fg="red", err=True)


def _verdict(passed: bool) -> str:
    return click.style("PASS", fg="green", bold=True) if passed else click.style("FAIL", fg="red", bold=True)


def _check_bounds(**values) -> None:
    result = get_validator().validate_bounds({k: v for k, v in values.items() if v is not None})
    if not result.is_valid:
        raise UsageError(result.error)


def _start(ctx: click.Context, **instance) -> RunReport:
    obj = ctx.obj
    obj["started"] = time.perf_counter()
    config = {key: obj[key] for key in ("seed",) if obj.get(key) is not None}
    return RunReport(command=obj["argv"], instance=instance, config=config)


def _finish(ctx: click.Context, report: RunReport, lines: List[str]) -> None:
    obj = ctx.obj
    if get_settings().report_include_timing:
        report.timing = round(time.perf_counter() - obj["started"], 3)
    for line in lines:
        click.echo(line)
    click.echo(f"{len(report.checks)} checks: {_verdict(report.passed)}")
    if obj.get("json"):
        report.write(obj["json"])
    if obj.get("record"):
        report_id = get_report_repository().save_report(report)
        click.echo(f"recorded as run {report_id}")
    ctx.exit(EXIT_PASS if report.passed else EXIT_FAIL)


def _twin(name: str, seed: Optional[int]):
    return self_twin(get_zoo_building(name), seed=seed)


@click.group(cls=TwinwallGroup)
@click.option("--json", "json_path", type=click.Path(dir_okay=False), help="Write the run report as JSON")
@click.option("--seed", type=int, default=None, help="Seed for sampled checks")
@click.option("--record", is_flag=True, help="Store the run report in the history database")
@click.pass_context
def cli(ctx, json_path, seed, record):
    """Twin buildings, wall-connectedness and RGD-system checks"""
    ctx.ensure_object(dict)
    _check_bounds(seed=seed)
    ctx.obj.update(json=json_path, seed=seed, record=record, argv=list(ctx.obj.get("argv") or []))


# zoo

@cli.group()
def zoo():
    """Built-in and ingested buildings"""


@zoo.command("list")
@click.pass_context
def zoo_list(ctx):
    """List the zoo members"""
    report = _start(ctx)
    lines = [f"{name:6} {description}" for name, (_, description) in ZOO_BUILDERS.items()]
    report.add("zoo", True, members=sorted(ZOO_BUILDERS))
    _finish(ctx, report, lines)


@zoo.command("build")
@click.argument("name")
@click.option("--dump", "dump_path", type=click.Path(dir_okay=False), help="Write the chamber-system dump")
@click.option("--dot", "dot_path", type=click.Path(dir_okay=False), help="Write the colored chamber graph")
@click.pass_context
def zoo_build(ctx, name, dump_path, dot_path):
    """Build a zoo member and describe it"""
    report = _start(ctx, name=name)
    b = get_zoo_building(name)
    summary = describe_building(b)
    report.add("build", True, building=summary)
    if dump_path:
        with open(dump_path, "w", encoding="utf-8") as handle:
            handle.write(b.dump())
    if dot_path:
        export_dot(b.chamber_graph(), dot_path, name="chambers")
    lines = [f"{key}: {value}" for key, value in summary.items()]
    _finish(ctx, report, lines)


@zoo.command("ingest")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def zoo_ingest(ctx, path):
    """Validate an incidence file and build its flag chamber system"""
    report = _start(ctx, path=path)
    b = ingest_rank2_geometry(path)
    summary = describe_building(b)
    report.add("ingest", True, building=summary)
    _finish(ctx, report, [f"{key}: {value}" for key, value in summary.items()])


# axioms

@cli.command()
@click.argument("name")
@click.option("--samples", type=int, default=None, help="Random triples instead of the exhaustive sweep")
@click.option("--twin", "with_twin", is_flag=True, help="Also check Tw1-Tw3 on the self-twin")
@click.pass_context
def axioms(ctx, name, samples, with_twin):
    """Building axiom sweep, gallery independence and optionally the twin axioms"""
    _check_bounds(samples=samples)
    seed = ctx.obj["seed"]
    report = _start(ctx, name=name)
    b = get_zoo_building(name)
    if samples is None and b.num_chambers > get_settings().full_table_limit:
        samples = get_settings().axiom_samples
    lines = []
    sweeps = [verify_building_axioms(b, samples=samples, seed=seed), check_gallery_independence(b, seed=seed)]
    if with_twin:
        t = _twin(name, seed)
        sweeps.append(verify_twin_axioms(t, samples=samples, seed=seed))
    for sweep in sweeps:
        report.add(sweep.name, sweep.passed, witnesses=[list(v) for v in sweep.violations],
                   checks=sweep.checks, exhaustive=sweep.exhaustive)
        mode = "exhaustive" if sweep.exhaustive else "sampled"
        lines.append(f"{sweep.name}: {sweep.checks} checks ({mode}) {_verdict(sweep.passed)}")
    _finish(ctx, report, lines)


# opposition

@cli.group()
def opp():
    """Opposition graphs and condition (co_k)"""


@opp.command("check")
@click.argument("name")
@click.option("--k", "k", type=int, default=0, show_default=True, help="Codistance length bound")
@click.option("--dot", "dot_path", type=click.Path(dir_okay=False), help="Write the graph at the first center")
@click.pass_context
def opp_check(ctx, name, k, dot_path):
    """Connectivity of c^op(k) for every center"""
    _check_bounds(k=k)
    report = _start(ctx, name=name, k=k)
    t = _twin(name, ctx.obj["seed"])
    co = condition_co_k(t, k)
    lines = [f"{t.name}: co_{k} over {len(co.results)} centers ({'transversal' if co.transversal else 'all'})"]
    for c, size, count in co.results:
        if count > 1:
            lines.append(f"  {c}: {size} chambers in {count} components")
    report.add(f"co_{k}", co.passed, witnesses=[repr(c) for c in co.failures()],
               centers=[[repr(c), size, count] for c, size, count in co.results])
    if dot_path:
        first = co.results[0][0]
        export_dot(opposition_graph(t, first, k).graph, dot_path, name="opposition")
    _finish(ctx, report, lines)


# walls

@cli.group()
def walls():
    """Wall graphs and wall-connectedness"""


@walls.command("check")
@click.argument("name")
@click.option("--bound", type=int, default=None, help="Anchored path length bound")
@click.option("--chamber", type=int, default=None, help="Only the wall graph at this plus chamber")
@click.option("--gen", "generator", type=int, default=None, help="Generator for --chamber")
@click.option("--dot", "dot_path", type=click.Path(dir_okay=False), help="Write the wall graph (with --chamber)")
@click.pass_context
def walls_check(ctx, name, bound, chamber, generator, dot_path):
    """Connectivity of every Gamma_s(c), with edge certificates re-verified"""
    _check_bounds(bound=bound)
    report = _start(ctx, name=name, bound=bound)
    t = _twin(name, ctx.obj["seed"])
    lines = []
    if chamber is not None:
        if generator is None or not 0 <= generator < t.rank:
            raise UsageError(f"--gen must name a generator below {t.rank}")
        if not 0 <= chamber < t.plus.num_chambers:
            raise UsageError(f"--chamber must lie below {t.plus.num_chambers}")
        wg = wall_graph(t, TwinChamber(PLUS, chamber), generator, bound=bound)
        certificates = verify_wall_graph(wg)
        report.add("wall graph", wg.connected, **wg.to_dict())
        report.add("edge certificates", certificates.passed, checks=certificates.checks,
                   witnesses=[list(v) for v in certificates.violations])
        lines.append(f"wall({wg.center}, s{generator}): {len(wg.vertices)} panels, "
                     f"{wg.graph.number_of_edges()} edges, {wg.verdict}")
        if dot_path:
            export_dot(wg.graph, dot_path, name="wall")
    else:
        result = is_wall_connected(t, bound=bound)
        for pair in result.results:
            lines.append(f"wall({pair.center}, s{pair.generator}): {pair.vertices} panels, "
                         f"{pair.components} components, {pair.verdict}")
        report.add("wall-connected", result.passed, transversal=result.transversal, bound=result.bound,
                   witnesses=[[repr(p.center), p.generator, p.verdict] for p in result.failures()])
    _finish(ctx, report, lines)


# isometries

@cli.group()
def isom():
    """Isometry extension and rigidity"""


@isom.command("extend")
@click.argument("name")
@click.option("--map", "map_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON plus map with an admissible minus pair; a random group element when omitted")
@click.pass_context
def isom_extend(ctx, name, map_path):
    """Extend a plus-half isometry to the minus half"""
    seed = ctx.obj["seed"]
    report = _start(ctx, name=name)
    t = _twin(name, seed)
    lines = []
    expected = None
    if map_path:
        with open(map_path, encoding="utf-8") as handle:
            data = parse_isometry_map(handle.read(), map_path)
        phi, c, c2 = TwinIsometry.from_input(t, t, data)
    else:
        if not isinstance(t.minus, FlagBuilding):
            raise UsageError(f"{name} carries no group action; pass --map")
        rng = random.Random(get_settings().sample_seed if seed is None else seed)
        expected = t.minus.act(random_group_element(t.minus, rng))
        phi = TwinIsometry.from_permutations(t, t, plus=expected)
        c, c2 = TwinChamber(MINUS, 0), TwinChamber(MINUS, int(expected[0]))
    extended = extend_to_minus(t, t, phi, c, c2)
    iso = check_isometry(extended)
    report.add("isometry", iso.passed, checks=iso.checks, witnesses=[list(v) for v in iso.violations])
    lines.append(f"extended to {len(extended)} chambers: {_verdict(iso.passed)}")
    if expected is not None:
        _, images = extended.arrays(MINUS)
        agrees = bool((images == expected).all())
        report.add("group action", agrees)
        lines.append(f"minus half matches the group action: {_verdict(agrees)}")
    _finish(ctx, report, lines)


@isom.command("rigidity")
@click.argument("name")
@click.option("--chamber", type=int, default=0, show_default=True, help="Plus chamber c+")
@click.pass_context
def isom_rigidity(ctx, name, chamber):
    """Whether fixing E_1(c+) and an opposite chamber forces the identity"""
    report = _start(ctx, name=name, chamber=chamber)
    t = _twin(name, ctx.obj["seed"])
    if not 0 <= chamber < t.plus.num_chambers:
        raise UsageError(f"--chamber must lie below {t.plus.num_chambers}")
    rigidity = check_rigidity(t, chamber)
    report.add("rigidity", rigidity.rigid, fixed=rigidity.fixed, forced=rigidity.forced, total=rigidity.total)
    _finish(ctx, report, [f"fixed {rigidity.fixed}, forced {rigidity.forced}/{rigidity.total}"])


# RGD systems

@cli.group()
def rgd():
    """Root group data of small matrix groups"""


@rgd.command("check")
@click.argument("family")
@click.pass_context
def rgd_check(ctx, family):
    """RGD axioms, commutator identities, (wc) and simple transitivity"""
    report = _start(ctx, family=family)
    f = load_family(family)
    lines = []
    axioms_report = validate_rgd_axioms(f)
    for name, sweep in axioms_report.axioms.items():
        report.add(name, sweep.passed, checks=sweep.checks, witnesses=[list(map(str, v)) for v in sweep.violations])
        lines.append(f"{name}: {sweep.checks} checks {_verdict(sweep.passed)}")

    n = f.gonality
    for i in range(1, 2 * n + 1):
        for k in range(i + 1, i + n - 1):
            order = len(commutator_projection(f, i, k))
            report.add(f"[U_{i},U_{i + n - 1}]_{k}", True, order=order)
    lines.append(f"commutator identities: {2 * n * (n - 2)} {_verdict(True)}")

    t = self_twin(get_zoo_building(f.building_name), seed=ctx.obj["seed"]) if f.building_name else None
    for side in (PLUS, MINUS):
        for s in range(f.coxeter.rank):
            wc = wc_consistency(f, s, side, t) if t is not None else check_wc_generation(f, s, side)
            ok = wc.equal and wc.consistent is not False
            report.add(f"wc s{s} side {side}", ok, full=wc.full_order, restricted=wc.restricted_order,
                       wall_connected=wc.wall_connected)
            lines.append(f"(wc) s{s} {'+' if side == PLUS else '-'}: |U| = {wc.full_order} {_verdict(ok)}")
        if t is not None:
            st = simply_transitive_check(f, t, side)
            report.add(f"simply transitive side {side}", st.simply_transitive,
                       group=st.group_order, opposite=st.opposite_count, orbit=st.orbit_size)
            lines.append(f"U on c^op: {st.group_order}/{st.opposite_count} {_verdict(st.simply_transitive)}")
    _finish(ctx, report, lines)


# affine certificates

@cli.group()
def affine():
    """Weyl-level certificates for affine rank-3 types"""


@affine.command("cert")
@click.argument("type_name", metavar="TYPE")
@click.option("--depth", type=int, default=None, help="Root depth bound")
@click.option("--gen", "generator", type=int, default=None, help="Only this generator")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write the certificate JSON")
@click.pass_context
def affine_cert(ctx, type_name, depth, generator, out_path):
    """Generate and re-verify certificates"""
    _check_bounds(depth=depth)
    report = _start(ctx, type=type_name, depth=depth)
    generators = [generator] if generator is not None else list(range(3))
    if out_path and len(generators) != 1:
        raise UsageError("--out needs --gen")
    lines = []
    for s in generators:
        certificate = generate_certificate(type_name, s, depth)
        verdict = verify_certificate(certificate.to_input())
        passed = certificate.complete and verdict.accepted
        report.add(f"{type_name} s{s}", passed, entries=len(certificate.entries),
                   witnesses=[[list(r.coords), reason] for r, reason in certificate.failures] + verdict.problems)
        lines.append(f"{type_name} s{s}: {len(certificate.entries)} entries, "
                     f"{len(certificate.failures)} failures {_verdict(passed)}")
        if out_path:
            with open(out_path, "w", encoding="utf-8") as handle:
                handle.write(certificate.to_json())
    _finish(ctx, report, lines)


@affine.command("verify")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mutations", type=int, default=None, help="Negative-control mutations")
@click.pass_context
def affine_verify(ctx, path, mutations):
    """Independent re-verification plus the mutation negative control"""
    _check_bounds(samples=mutations)
    report = _start(ctx, path=path)
    certificate = load_certificate(path)
    verdict = verify_certificate(certificate)
    report.add("verify", verdict.accepted, checked=verdict.checked, witnesses=verdict.problems[:20])
    lines = [f"{certificate.type} s{certificate.s}: {verdict.checked} entries {_verdict(verdict.accepted)}"]
    if verdict.accepted:
        control = negative_control(certificate, mutations, seed=ctx.obj["seed"])
        report.add("negative control", control.passed, total=control.total, rejected=control.rejected,
                   witnesses=control.accepted_mutations)
        lines.append(f"mutations rejected: {control.rejected}/{control.total} {_verdict(control.passed)}")
    _finish(ctx, report, lines)


# history

@cli.command()
@click.option("--limit", type=int, default=20, show_default=True)
@click.pass_context
def history(ctx, limit):
    """Recently recorded runs"""
    rows = get_report_repository().list_recent(limit)
    for row in rows:
        mark = click.style("pass", fg="green") if row["passed"] else click.style("fail", fg="red")
        click.echo(f"{row['id']:5} {row['created_at']} {mark} {row['command']}")
    if not rows:
        click.echo("no recorded runs")
