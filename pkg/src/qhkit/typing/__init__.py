from typing import Callable

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]
BoolArray = npt.NDArray[np.bool_]

CoordinateMap = Callable[[FloatArray], FloatArray]

# label used for the point at infinity in transformed spaces
INFINITY = -1
