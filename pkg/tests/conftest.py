import pytest

from archsweep import MachineConstants, StencilKernel


@pytest.fixture
def jacobi():
    return StencilKernel(
        name="Jacobi-2D", dims=2, order=1, n_arrays=2,
        flops_per_point=5, bytes_per_elem=4, c_iter=1e-9,
    )


@pytest.fixture
def heat3d():
    return StencilKernel(
        name="Heat-3D", dims=3, order=1, n_arrays=2,
        flops_per_point=14, bytes_per_elem=4, c_iter=2.8e-9,
    )


@pytest.fixture
def mc():
    return MachineConstants()


@pytest.fixture
def mc_nolimit():
    return MachineConstants(bandwidth_gbps=float("inf"))
