from collections.abc import Callable
from typing import Any

import numpy as np
import numpy.typing as npt

type ComplexVector = npt.NDArray[np.complex128]
type ComplexMatrix = npt.NDArray[np.complex128]
type RealVector = npt.NDArray[np.float64]
type Dims = tuple[int, ...]

type SyncFunction = Callable[..., Any]
