"""Shared fixtures: the heavy forward problems are assembled once per session."""

import numpy as np
import pytest

from eitmono import config as configmod
from eitmono import fem, geometry, monotonicity, ntd


@pytest.fixture(scope="session")
def concentric_phantom():
    return geometry.Phantom([geometry.Disk((0.0, 0.0), 0.3, 1.0)])


@pytest.fixture(scope="session")
def concentric_sweep(concentric_phantom):
    """Concentric benchmark (contrast 1, radius 0.3) at three refinements.

    Maps mesh refinement R to (mesh, V, presym_asymmetry) for the order-8
    current basis; used both by module oracles and the acceptance gate.
    """
    basis = ntd.CurrentBasis(8)
    sweep = {}
    for refinement in (16, 32, 64):
        mesh = fem.generate_mesh(refinement, concentric_phantom)
        V, asym = ntd.assemble_V(mesh, basis)
        sweep[refinement] = (mesh, V, asym)
    return basis, sweep


@pytest.fixture(scope="session")
def fig1():
    """Figure-1 forward problem at acceptance scale, shared read-only."""
    conf = configmod.preset("figure1")
    phantom = conf.phantom()
    mesh = fem.generate_mesh(conf.mesh_refinement, phantom,
                             sigma_samples=conf.sigma_samples)
    basis = ntd.CurrentBasis(conf.n1)
    V, asym = ntd.assemble_V(mesh, basis)
    partition = geometry.build_partition(conf.partition_resolution)
    classes = geometry.classify_partition(partition, phantom,
                                          samples=conf.classify_samples)
    sens = ntd.assemble_sensitivities(partition.pixels, basis,
                                      subdiv=conf.quad_subdiv)
    return {
        "conf": conf,
        "phantom": phantom,
        "mesh": mesh,
        "basis": basis,
        "V": V,
        "asym": asym,
        "partition": partition,
        "classes": classes,
        "sens": sens,
        "S": np.array([s.entries for s in sens]),
        "a": monotonicity.contrast_bound(conf.resolved_gamma_min()),
    }
