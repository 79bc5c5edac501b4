"""Clifford-steerable convolutions on pseudo-Euclidean grids R^{p,q}.

The package builds the stack bottom-up: dense Clifford algebra
(:mod:`csconv.algebra`), the pseudo-orthogonal group and its action on
multivectors (:mod:`csconv.group`), equivariant network layers
(:mod:`csconv.cgenn`), implicit steerable kernels (:mod:`csconv.kernel`),
convolution of multivector fields (:mod:`csconv.conv`), a minimal
reverse-mode engine (:mod:`csconv.autodiff`), toy training
(:mod:`csconv.train`), and executable checks of every symmetry claim
(:mod:`csconv.verify`).
"""

from .algebra import (
    CayleyTable,
    Multivector,
    Signature,
    blade_grade,
    blade_label,
    build_cayley,
    cl_embed,
    extended_inner_product,
    geometric_product,
    grade_projection,
)
from .cgenn import (
    KernelNetConfig,
    geometric_product_layer,
    kernel_network_forward,
    linear_layer,
    mv_activation,
)
from .conv import MultivectorField, conv_forward, model_forward
from .group import (
    CliffordRep,
    GroupElement,
    boost,
    compose,
    identity,
    inverse,
    reflection,
    rho_cl_matrix,
    rho_hom_apply,
    rotation,
    sample_boost,
    sample_rotation,
)
from .kernel import (
    KernelConfig,
    KernelGrid,
    SteerableKernel,
    generate_kernel,
    init_kernel_params,
    kernel_head_apply,
    kernel_operator,
    scalar_shell,
)
from .train import ToyTask, TrainReport, synth_field, train_loop
from .verify import (
    IsometryAction,
    angular_spectrum,
    compose_kernels,
    relative_equivariance_error,
    run_suite,
    steerability_error,
    transform_field,
)

__version__ = "0.1.0"
