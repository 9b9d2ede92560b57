"""spaccel: analytical modeling and scheduling for heterogeneous sparse
matrix-multiplication accelerators.

Subpackages: formats (compressed storage), kernels (functional dataflow
kernels with exact counters), costmodel (cycle/traffic/energy model),
archtemplate (area-budgeted accelerator configurations), scheduler
(single-kernel partitioning and many-kernel queues), workloads (bundled
suite and ingestion), cli (batch front-end).
"""

__version__ = "0.1.0"
