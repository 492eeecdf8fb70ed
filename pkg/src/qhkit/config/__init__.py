from .checks import SuiteChecks
from .mesh import MeshConfig
from .sampling import SamplingConfig, ScanConfig
from .suite import SuiteConfig
