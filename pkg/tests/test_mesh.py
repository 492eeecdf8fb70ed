from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from qhkit.config import MeshConfig
from qhkit.errors import DomainError, MeshError
from qhkit.generators import gen_disk, gen_grid_rect, gen_slit_disk, gen_snowflake_disk
from qhkit.sampling import sample_pairs
from qhkit.spaces import DomainSpace, FiniteMetricSpace, build_mesh, length_distance, space_graph
from qhkit.spaces.mesh import admissible_lengths

from .conftest import FAST_SAMPLING


def two_islands() -> DomainSpace:
    left = np.linspace(-5.0, -4.0, 11)
    right = np.linspace(4.0, 5.0, 11)
    coords = np.concatenate([left, right, [0.0, -10.0, 10.0]]).reshape(-1, 1)
    return DomainSpace(FiniteMetricSpace.euclidean(coords), interior=np.arange(22), boundary=[22, 23, 24], name="islands")


def test_disk_mesh_respects_clearance(disk):
    mesh = disk.mesh
    assert mesh.clearance_ok()
    assert mesh.num_edges > 0
    u, v = mesh.edges[:, 0], mesh.edges[:, 1]
    assert np.all(mesh.lengths <= 0.5 * np.minimum(mesh.clearance[u], mesh.clearance[v]) * (1 + 1e-9))


def test_disk_mesh_strands_points_near_the_boundary(disk):
    mesh = disk.mesh
    assert mesh.stranded.size > 0
    assert mesh.size + mesh.stranded.size == disk.interior.size
    # an edge of length h needs clearance 2h
    assert np.all(disk.clearance(mesh.stranded) < 0.2 + 1e-9)


def test_disconnected_mesh_names_components():
    with pytest.raises(MeshError) as info:
        two_islands().mesh
    components = info.value.components
    assert len(components) == 2
    assert sorted(c["size"] for c in components) == [11, 11]


def test_path_to_stranded_point_fails(disk):
    stranded = int(disk.mesh.stranded[0])
    center = disk.nearest_interior([0.0, 0.0])
    with pytest.raises(MeshError):
        length_distance(disk, center, stranded)


def test_invalid_mesh_parameters(disk):
    with pytest.raises(DomainError):
        build_mesh(disk, beta=0.75)
    with pytest.raises(DomainError):
        build_mesh(disk, k=0)


def test_smaller_beta_strands_more(disk):
    tight = disk.with_mesh_config(MeshConfig(beta=0.3, k=8))
    assert tight.mesh.stranded.size > disk.mesh.stranded.size


def test_length_distance_along_axis(disk):
    a = disk.nearest_interior([-0.5, 0.0])
    b = disk.nearest_interior([0.5, 0.0])
    assert length_distance(disk, a, b) == pytest.approx(1.0)
    assert length_distance(disk, a, a) == 0.0


def test_mesh_paths_are_deterministic(disk):
    a = disk.nearest_interior([-0.4, -0.3])
    b = disk.nearest_interior([0.5, 0.2])
    first, w1 = disk.mesh.path(a, b)
    second, w2 = disk.mesh.path(a, b)
    assert first == second
    assert w1 == w2
    assert first[0] == a and first[-1] == b


def test_space_graph_has_no_clearance():
    coords = np.stack(np.meshgrid(np.arange(5.0), np.arange(5.0)), axis=-1).reshape(-1, 2)
    graph = space_graph(FiniteMetricSpace.euclidean(coords), k=4)
    assert graph.size == 25
    assert np.all(np.isinf(graph.clearance))
    assert graph.num_edges >= 40


def snowflake_disk(h: float) -> DomainSpace:
    return gen_snowflake_disk(0.5, h)


@pytest.mark.parametrize("h", [0.1, 0.05])
@pytest.mark.parametrize("generate", [gen_disk, gen_grid_rect, gen_slit_disk, snowflake_disk])
def test_generated_domains_mesh(generate, h):
    dom = generate(h)
    mesh = build_mesh(dom)
    assert mesh.clearance_ok()
    assert mesh.size + mesh.stranded.size == dom.interior.size
    assert mesh.size > 0


def test_grid_ring_at_twice_the_spacing_is_meshed():
    dom = gen_grid_rect(0.1)
    mesh = dom.mesh
    # the ring at clearance h is stranded, the one at 2h carries edges of length h
    assert mesh.clearance.min() == pytest.approx(0.2)
    assert np.all(dom.clearance(mesh.stranded) < 0.2 - 1e-6)


def test_admissibility_tolerates_rounding():
    lengths = np.array([0.1, 0.1])
    clearance = np.array([0.19999999999999996, 0.19])
    assert admissible_lengths(lengths, clearance, np.full(2, 1.0), 0.5).tolist() == [True, False]


def test_slit_disk_paths_go_around_the_slit():
    dom = gen_slit_disk(0.1)
    above, below = dom.nearest_interior([0.5, 0.2]), dom.nearest_interior([0.5, -0.2])
    # the straight segment crosses the slit, the mesh path has to pass left of the origin
    assert length_distance(dom, above, below) > 1.0


def test_length_distance_dominates_ambient(disk):
    pairs = sample_pairs(disk, FAST_SAMPLING)
    mesh = disk.mesh
    rows = mesh.distances(pairs[:, 0])
    lengths = rows[np.arange(pairs.shape[0]), mesh.positions(pairs[:, 1])]
    ambient = disk.ambient.pairwise_positions(np.arange(disk.ambient.size), pairs[:, 0], pairs[:, 1])
    assert np.all(lengths >= ambient - 1e-12)


@pytest.mark.parametrize("a, b", [
    ((-0.5, 0.0), (0.5, 0.0)),
    ((-0.4, -0.3), (0.5, 0.2)),
    ((0.0, 0.6), (0.3, -0.6)),
])
def test_refinement_never_lengthens_paths(a, b):
    coarse, fine = gen_disk(0.1), gen_disk(0.05)
    d_coarse = length_distance(coarse, coarse.nearest_interior(a), coarse.nearest_interior(b))
    d_fine = length_distance(fine, fine.nearest_interior(a), fine.nearest_interior(b))
    assert d_fine <= d_coarse + 1e-9


def test_snowflake_lengths_grow_under_refinement():
    lengths = []
    for h in (0.1, 0.05):
        dom = gen_snowflake_disk(0.5, h)
        lengths.append(length_distance(dom, dom.nearest_interior([-0.5, 0.0]), dom.nearest_interior([0.5, 0.0])))
    assert lengths[1] / lengths[0] >= 1.3


def test_mesh_is_built_once_across_threads():
    dom = gen_disk(0.2)
    with ThreadPoolExecutor(4) as pool:
        meshes = list(pool.map(lambda _: dom.mesh, range(8)))
    assert all(mesh is meshes[0] for mesh in meshes)
