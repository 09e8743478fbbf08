# Services de simulation
