"""Basin-hopping harness over generate/improve/perturb operator triples, with
built-in hexagon-packing and autoconvolution-ratio benchmarks, a MAP-Elites
outer loop over candidate operators, and a line-delimited wire protocol for
external candidate processes."""
from .autocorr import (AciReport, StepFunction, aci_finalize, aci_fitness,
                       aci_generate, aci_improve, aci_perturb, autoconvolve)
from .basinhop import (BasinHopParams, OperatorTriple, RunTrace, SigmaSchedule,
                       apply_invalid_policy, run_validation)
from .errors import (CandidateDiscarded, CallTimeout, ImprovementFailedError,
                     InvalidSolutionError, MalformedSolutionError,
                     NoValidStartError, ProtocolError, SpawnError, TripleHopError)
from .evolution import (Archive, Candidate, EvolutionParams, GenerationReport,
                        mutate_builtin, select_elites, step_generation)
from .geometry import (Hexagon, Point2, hex_vertices, intersection_area,
                       min_enclosing_side, penetration_depth)
from .hexpack import (HexConfig, HexValidationReport, hex_fitness, hex_generate,
                      hex_improve, hex_perturb, hex_validate)

__all__ = [name for name in dir() if not name.startswith("_")]
