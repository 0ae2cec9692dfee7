from .common import (
    DEFAULT_RHO_GRID,
    CertificateReport,
    Infeasible,
    NotStabilizableDetectable,
    RhoDiagnostic,
    SingularStack,
    SynthesisError,
)
from .full_order import FullOrderProtocol, full_order_interval, synthesize_full_order, verify_full_order
from .plant import Plant, check_stabilizable_detectable
from .reduced_order import (
    ReducedOrderProtocol,
    companion_from_eigenvalues,
    default_observer_weight,
    identity_residual,
    observer_maps,
    reduced_certificates,
    reduced_order_interval,
    synthesize_reduced_order,
)
from .serialize import ProtocolFormatError, load_protocol, protocol_from_text, protocol_to_text, save_protocol
