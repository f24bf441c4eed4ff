from .benchmark import benchmark
from .compare import compare
from .form import form
from .predict import predict
from .simulate import simulate
