# Data processing modules
